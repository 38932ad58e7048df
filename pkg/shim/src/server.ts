import { randomUUID } from "crypto";
import express, { Express, NextFunction, Request, RequestHandler, Response } from "express";
import { z } from "zod";
import { Endpoint, ShimConfig } from "./config";
import { BoundedQueue } from "./limiter";
import { ModelFault, Models } from "./models";

export type Logger = (line: string) => void;

const BODIES = {
  parse: z.object({ text: z.string() }),
  generate: z.object({ penman: z.string() }),
  paraphrase: z.object({ text: z.string(), n: z.number().int().min(0) }),
  qg_from_answer: z.object({
    context: z.string(),
    answer: z.string(),
    n: z.number().int().min(0),
  }),
  answer: z.object({ context: z.string(), question: z.string() }),
} as const;

function requestLog(log: Logger): RequestHandler {
  return (req, res, next) => {
    const id = randomUUID();
    const started = Date.now();
    res.setHeader("x-request-id", id);
    res.once("finish", () => {
      log(`${id} ${req.method} ${req.path} ${res.statusCode} ${Date.now() - started}ms`);
    });
    next();
  };
}

function admission(queue: BoundedQueue): RequestHandler {
  return (req, res, next) => {
    void queue.enter().then((admitted) => {
      if (!admitted) {
        res.status(429).json({ error: "request queue is full" });
        return;
      }
      let released = false;
      const release = () => {
        if (!released) {
          released = true;
          queue.leave();
        }
      };
      res.once("finish", release);
      res.once("close", release);
      next();
    });
  };
}

function endpointHandler<K extends Endpoint>(
  name: K,
  run: (body: z.infer<(typeof BODIES)[K]>) => Promise<unknown>,
): RequestHandler {
  return (req, res, next) => {
    const parsed = BODIES[name].safeParse(req.body);
    if (!parsed.success) {
      const issue = parsed.error.issues[0];
      res.status(422).json({
        error: `${issue.path.join(".") || "body"}: ${issue.message}`,
      });
      return;
    }
    run(parsed.data as never)
      .then((payload) => res.json(payload))
      .catch(next);
  };
}

/**
 * Assemble the express app for a parsed config. Only endpoints present in
 * the config's models table get routes; health reports exactly that set.
 */
export function createServer(
  config: ShimConfig,
  models: Models,
  log: Logger = console.log,
): Express {
  const app = express();
  app.disable("x-powered-by");
  app.use(requestLog(log));
  app.use(admission(new BoundedQueue(config.maxBatch, config.queueDepth)));
  app.use(express.json({ limit: `${config.maxPayloadKb}kb` }));

  const routes: Record<Endpoint, RequestHandler> = {
    parse: endpointHandler("parse", async (body) => ({
      penman: await models.parse(body.text),
    })),
    generate: endpointHandler("generate", async (body) => ({
      text: await models.generate(body.penman),
    })),
    paraphrase: endpointHandler("paraphrase", async (body) => ({
      texts: await models.paraphrase(body.text, body.n),
    })),
    qg_from_answer: endpointHandler("qg_from_answer", async (body) => ({
      questions: await models.qgFromAnswer(body.context, body.answer, body.n),
    })),
    answer: endpointHandler("answer", async (body) => ({
      answer: await models.answer(body.context, body.question),
    })),
  };

  app.get("/v1/health", (_req, res) => {
    res.json({
      status: "ok",
      models: config.enabled.map((name) => `${name}:${config.models[name]}`),
    });
  });
  for (const endpoint of config.enabled) {
    app.post(`/v1/${endpoint}`, routes[endpoint]);
  }

  app.use((_req, res) => {
    res.status(404).json({ error: "no such route" });
  });
  app.use((err: unknown, _req: Request, res: Response, _next: NextFunction) => {
    if (err instanceof ModelFault) {
      res.status(422).json({ error: err.message });
    } else if ((err as { type?: string }).type === "entity.too.large") {
      res.status(413).json({ error: `payload exceeds ${config.maxPayloadKb}kb` });
    } else if (err instanceof SyntaxError) {
      res.status(400).json({ error: "request body is not valid JSON" });
    } else {
      log(`unhandled: ${(err as Error).stack ?? err}`);
      res.status(500).json({ error: "internal error" });
    }
  });
  return app;
}
