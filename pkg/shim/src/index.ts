#!/usr/bin/env node
import { AddressInfo } from "net";
import { ConfigError, PROMPTED_ENDPOINTS, ShimConfig, defaultConfig, loadConfig } from "./config";
import { ModelLoadError, createModels } from "./models";
import { loadTemplates, placeholderNames } from "./prompts";
import { createServer } from "./server";

const KNOWN_PLACEHOLDERS = new Set([
  "CONTEXT",
  "N_PAIR",
  "ANSWER",
  "QUESTION_SENTENCE",
]);

function parseArgs(argv: string[]): { config?: string; port?: number; host?: string } {
  const out: { config?: string; port?: number; host?: string } = {};
  for (let i = 0; i < argv.length; i += 1) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (flag === "--config") out.config = value;
    else if (flag === "--port") out.port = Number(value);
    else if (flag === "--host") out.host = value;
    else {
      console.error(`unknown argument: ${flag}`);
      console.error("usage: recipeqg-shim [--config file.json] [--port N] [--host ADDR]");
      process.exit(2);
    }
    i += 1;
  }
  return out;
}

function main(): void {
  const args = parseArgs(process.argv.slice(2));
  const overrides: Record<string, unknown> = {};
  if (args.port !== undefined) overrides.port = args.port;
  if (args.host !== undefined) overrides.host = args.host;

  let config: ShimConfig;
  try {
    config = args.config ? loadConfig(args.config, overrides) : defaultConfig(overrides);
    const models = createModels(config);
    const needed = config.enabled.filter((e) => PROMPTED_ENDPOINTS.includes(e));
    let templates;
    try {
      templates = loadTemplates(config.promptDir, needed);
    } catch (err) {
      throw new ConfigError((err as Error).message);
    }
    for (const [name, template] of Object.entries(templates)) {
      const unknown = placeholderNames(template ?? "").filter(
        (p) => !KNOWN_PLACEHOLDERS.has(p),
      );
      if (unknown.length > 0) {
        throw new ConfigError(`template ${name} uses unknown placeholders: ${unknown.join(", ")}`);
      }
    }
    const app = createServer(config, models);
    const server = app.listen(config.port, config.host, () => {
      const addr = server.address() as AddressInfo;
      console.log(`listening on http://${config.host}:${addr.port}`);
      console.log(`endpoints: ${config.enabled.join(", ")} (device ${config.device})`);
    });
  } catch (err) {
    if (err instanceof ConfigError || err instanceof ModelLoadError) {
      console.error(`startup failure: ${err.message}`);
      process.exit(1);
    }
    throw err;
  }
}

main();
