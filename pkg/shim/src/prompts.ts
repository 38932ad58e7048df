import { readFileSync } from "fs";
import path from "path";

/** Thrown when a template references a placeholder the caller did not bind. */
export class UnboundPlaceholder extends Error {}

const PLACEHOLDER = /\{([A-Z][A-Z0-9_]*)\}/g;

/**
 * Substitute {NAME} placeholders into a prompt template.
 *
 * The template text is otherwise passed through verbatim, so prompts sent
 * upstream match the files on disk character for character.
 */
export function renderPrompt(
  template: string,
  bindings: Record<string, string | number>,
): string {
  return template.replace(PLACEHOLDER, (_match, key: string) => {
    const value = bindings[key];
    if (value === undefined) {
      throw new UnboundPlaceholder(`no binding for {${key}}`);
    }
    return String(value);
  });
}

/** Unique placeholder names appearing in a template, in order of first use. */
export function placeholderNames(template: string): string[] {
  const names = [...template.matchAll(PLACEHOLDER)].map((m) => m[1]);
  return [...new Set(names)];
}

export type PromptTemplates = Partial<Record<string, string>>;

export const DEFAULT_PROMPT_DIR = path.resolve(__dirname, "..", "prompts");

export const PROMPT_NAMES = ["paraphrase", "qg_from_answer", "answer"] as const;

/**
 * Read prompt templates from a directory, one {name}.txt per endpoint.
 * Every requested name must exist; a prompt-driven endpoint without its
 * template is a configuration error, not something to paper over.
 */
export function loadTemplates(
  dir: string = DEFAULT_PROMPT_DIR,
  needed: readonly string[] = PROMPT_NAMES,
): PromptTemplates {
  const out: PromptTemplates = {};
  for (const name of needed) {
    const file = path.join(dir, `${name}.txt`);
    try {
      out[name] = readFileSync(file, "utf-8");
    } catch {
      throw new Error(`endpoint ${name} needs a prompt template at ${file}`);
    }
  }
  return out;
}
