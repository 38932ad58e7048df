import { readFileSync } from "fs";
import path from "path";
import { z } from "zod";

export const ENDPOINTS = [
  "parse",
  "generate",
  "paraphrase",
  "qg_from_answer",
  "answer",
] as const;
export type Endpoint = (typeof ENDPOINTS)[number];

/** Endpoints whose models consume a rendered prompt rather than raw fields. */
export const PROMPTED_ENDPOINTS: readonly Endpoint[] = [
  "paraphrase",
  "qg_from_answer",
  "answer",
];

const DEFAULT_MODELS: Record<Endpoint, string> = {
  parse: "rule/amr-parse-v0",
  generate: "rule/amr-generate-v0",
  paraphrase: "rule/paraphrase-v0",
  qg_from_answer: "rule/qg-v0",
  answer: "rule/answer-v0",
};

const shimConfigSchema = z.object({
  host: z.string().default("127.0.0.1"),
  port: z.number().int().min(0).max(65535).default(8731),
  device: z.enum(["cpu", "cuda", "auto"]).default("cpu"),
  // Admission cap: at most maxBatch requests run at once, queueDepth more
  // may wait, anything beyond that is refused with 429.
  maxBatch: z.number().int().min(1).default(4),
  queueDepth: z.number().int().min(0).default(16),
  maxPayloadKb: z.number().int().min(1).default(256),
  models: z.partialRecord(z.enum(ENDPOINTS), z.string().min(1)).default(DEFAULT_MODELS),
  promptDir: z.string().optional(),
});

export type ShimConfig = z.infer<typeof shimConfigSchema> & {
  enabled: Endpoint[];
};

/** Raised for unusable configuration; the process should not start. */
export class ConfigError extends Error {}

function finish(parsed: z.infer<typeof shimConfigSchema>): ShimConfig {
  const enabled = ENDPOINTS.filter((name) => parsed.models[name]);
  if (enabled.length === 0) {
    throw new ConfigError("no endpoints enabled: the models table is empty");
  }
  return { ...parsed, enabled };
}

export function defaultConfig(overrides: Record<string, unknown> = {}): ShimConfig {
  return finish(shimConfigSchema.parse(overrides));
}

/**
 * Load a JSON config file. promptDir is resolved against the file's
 * directory so configs can be checked in next to their templates.
 */
export function loadConfig(
  file: string,
  overrides: Record<string, unknown> = {},
): ShimConfig {
  let data: unknown;
  try {
    data = JSON.parse(readFileSync(file, "utf-8"));
  } catch (err) {
    throw new ConfigError(`cannot read config ${file}: ${(err as Error).message}`);
  }
  const result = shimConfigSchema.safeParse({
    ...(data as Record<string, unknown>),
    ...overrides,
  });
  if (!result.success) {
    throw new ConfigError(`bad config ${file}: ${result.error.issues[0].message}`);
  }
  const parsed = result.data;
  if (parsed.promptDir !== undefined) {
    parsed.promptDir = path.resolve(path.dirname(file), parsed.promptDir);
  }
  return finish(parsed);
}
