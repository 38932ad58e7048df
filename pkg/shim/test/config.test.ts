import { mkdtempSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import path from "path";
import { describe, expect, it } from "vitest";
import { ConfigError, ENDPOINTS, defaultConfig, loadConfig } from "../src/config";

function writeConfig(data: unknown): string {
  const dir = mkdtempSync(path.join(tmpdir(), "shim-config-"));
  const file = path.join(dir, "shim.json");
  writeFileSync(file, JSON.stringify(data));
  return file;
}

describe("defaultConfig", () => {
  it("enables every endpoint with a rule model", () => {
    const config = defaultConfig();
    expect(config.enabled).toEqual([...ENDPOINTS]);
    for (const name of config.enabled) {
      expect(config.models[name]).toMatch(/^rule\//);
    }
  });

  it("applies overrides before validation", () => {
    expect(defaultConfig({ port: 0 }).port).toBe(0);
    expect(() => defaultConfig({ maxBatch: 0 })).toThrow();
  });
});

describe("loadConfig", () => {
  it("reads a file and applies overrides on top", () => {
    const file = writeConfig({ port: 9001, maxBatch: 2 });
    const config = loadConfig(file, { port: 0 });
    expect(config.port).toBe(0);
    expect(config.maxBatch).toBe(2);
    expect(config.device).toBe("cpu");
  });

  it("narrows the enabled set to the models table", () => {
    const file = writeConfig({ models: { parse: "rule/amr-parse-v0" } });
    expect(loadConfig(file).enabled).toEqual(["parse"]);
  });

  it("resolves promptDir against the config file", () => {
    const file = writeConfig({ promptDir: "prompts" });
    const config = loadConfig(file);
    expect(config.promptDir).toBe(path.join(path.dirname(file), "prompts"));
  });

  it("rejects an empty models table", () => {
    const file = writeConfig({ models: {} });
    expect(() => loadConfig(file)).toThrow(ConfigError);
  });

  it("rejects unreadable files and bad values", () => {
    expect(() => loadConfig("/nonexistent/shim.json")).toThrow(ConfigError);
    expect(() => loadConfig(writeConfig({ device: "tpu" }))).toThrow(ConfigError);
    expect(() => loadConfig(writeConfig({ models: { parse: "" } }))).toThrow(ConfigError);
  });
});
