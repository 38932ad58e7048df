import { Endpoint, ShimConfig } from "./config";
import { AmrNode, AmrValue, PenmanSyntaxError, formatPenman, parsePenman, walkNodes } from "./penman";

/** A per-request model failure; the server reports it as 422. */
export class ModelFault extends Error {}

/** A model id that cannot be loaded; the process should not start. */
export class ModelLoadError extends Error {}

export interface Models {
  parse(text: string): Promise<string>;
  generate(penman: string): Promise<string>;
  paraphrase(text: string, n: number): Promise<string[]>;
  qgFromAnswer(context: string, answer: string, n: number): Promise<string[]>;
  answer(context: string, question: string): Promise<string>;
}

const ARTICLES = new Set(["the", "a", "an", "some", "any"]);

const PREP_ROLES: Record<string, string> = {
  in: ":location",
  on: ":location",
  into: ":location",
  onto: ":location",
  at: ":time",
  for: ":duration",
  with: ":instrument",
  over: ":manner",
  until: ":extent",
  from: ":source",
  by: ":manner",
};

const ROLE_PREPS: Record<string, string> = {
  ":location": "in",
  ":time": "at",
  ":duration": "for",
  ":instrument": "with",
  ":manner": "over",
  ":extent": "until",
  ":source": "from",
  ":destination": "to",
  ":purpose": "to",
  ":accompanier": "with",
  ":ARG2": "to",
};

const STOPWORDS = new Set([
  "the", "a", "an", "some", "any", "and", "or", "to", "in", "on", "at",
  "of", "for", "with", "do", "does", "you", "we", "it", "is", "are",
  "what", "which", "how", "where", "when", "why", "who",
]);

function words(text: string): string[] {
  return (text.toLowerCase().match(/[a-z0-9']+/g) ?? []);
}

function singular(noun: string): string {
  if (noun.endsWith("ies")) return noun.slice(0, -3) + "y";
  if (noun.endsWith("s") && !noun.endsWith("ss")) return noun.slice(0, -1);
  return noun;
}

function pastParticiple(verb: string): string {
  if (verb.endsWith("e")) return verb + "d";
  if (/[^aeiou][aeiou][bdglmnprt]$/.test(verb)) return verb + verb.slice(-1) + "ed";
  return verb + "ed";
}

function decap(text: string): string {
  return /^[A-Z][a-z]/.test(text) ? text[0].toLowerCase() + text.slice(1) : text;
}

/** Allocates PENMAN variables: first letter of the concept, then b2, b3... */
class VarPool {
  private counts = new Map<string, number>();

  next(concept: string): string {
    const letter = /^[a-z]/.test(concept) ? concept[0] : "x";
    const n = (this.counts.get(letter) ?? 0) + 1;
    this.counts.set(letter, n);
    return n === 1 ? letter : `${letter}${n}`;
  }
}

function entityNode(chunk: string[], pool: VarPool): AmrNode | null {
  const content = chunk.filter((w) => !ARTICLES.has(w));
  if (content.length === 0) return null;
  let quant: string | null = null;
  const rest: string[] = [];
  for (const word of content) {
    if (/^\d+(\.\d+)?$/.test(word) && quant === null) quant = word;
    else rest.push(word);
  }
  if (rest.length === 0) {
    return { variable: pool.next(quant ?? "x"), concept: quant ?? "thing", edges: [] };
  }
  const head = singular(rest[rest.length - 1]);
  const node: AmrNode = { variable: pool.next(head), concept: head, edges: [] };
  if (quant !== null) node.edges.push([":quant", { literal: quant }]);
  for (const mod of rest.slice(0, -1)) {
    node.edges.push([":mod", { variable: pool.next(mod), concept: mod, edges: [] }]);
  }
  return node;
}

function coordinated(chunk: string[], pool: VarPool): AmrNode | null {
  const parts: string[][] = [[]];
  for (const word of chunk) {
    if (word === "and" || word === "or") parts.push([]);
    else parts[parts.length - 1].push(word);
  }
  const nodes = parts
    .map((part) => entityNode(part, pool))
    .filter((n): n is AmrNode => n !== null);
  if (nodes.length === 0) return null;
  if (nodes.length === 1) return nodes[0];
  const conj: AmrNode = { variable: pool.next("and"), concept: "and", edges: [] };
  nodes.forEach((n, i) => conj.edges.push([`:op${i + 1}`, n]));
  return conj;
}

/**
 * Imperative-instruction parser. The first word becomes the root frame,
 * the span before the first preposition becomes :ARG1, and each
 * prepositional chunk becomes the corresponding non-core role. "to" + verb
 * becomes a :purpose frame, "to" + noun phrase a :destination.
 */
function parseInstruction(text: string): string {
  const tokens = words(text);
  if (tokens.length === 0) throw new ModelFault("cannot parse empty text");
  const pool = new VarPool();
  const verb = tokens[0];
  const root: AmrNode = {
    variable: pool.next(verb),
    concept: `${verb}-01`,
    edges: [
      [":mode", { literal: "imperative" }],
      [":ARG0", { variable: pool.next("you"), concept: "you", edges: [] }],
    ],
  };

  const chunks: Array<[string | null, string[]]> = [[null, []]];
  for (const word of tokens.slice(1)) {
    if (PREP_ROLES[word] !== undefined || word === "to") {
      chunks.push([word, []]);
    } else {
      chunks[chunks.length - 1][1].push(word);
    }
  }
  for (const [prep, chunk] of chunks) {
    if (chunk.length === 0) continue;
    if (prep === null) {
      const arg = coordinated(chunk, pool);
      if (arg) root.edges.push([":ARG1", arg]);
    } else if (prep === "to" && !ARTICLES.has(chunk[0]) && chunk.length > 1) {
      const sub: AmrNode = {
        variable: pool.next(chunk[0]),
        concept: `${chunk[0]}-01`,
        edges: [],
      };
      const arg = coordinated(chunk.slice(1), pool);
      if (arg) sub.edges.push([":ARG1", arg]);
      root.edges.push([":purpose", sub]);
    } else {
      const role = prep === "to" ? ":destination" : PREP_ROLES[prep];
      const target = coordinated(chunk, pool);
      if (target) root.edges.push([role, target]);
    }
  }
  return formatPenman(root);
}

function isFrame(concept: string): boolean {
  return /-\d+$/.test(concept);
}

function frameLemma(concept: string): string {
  return concept.replace(/-\d+$/, "").replace(/-/g, " ");
}

function hasUnknown(root: AmrNode): boolean {
  return walkNodes(root).some((n) => n.concept === "amr-unknown");
}

function realizeEntity(value: AmrValue, byVar: Map<string, AmrNode>): string {
  if ("literal" in value) return value.literal.replace(/^"|"$/g, "");
  const node = "ref" in value ? byVar.get(value.ref) : value;
  if (!node) return "it";
  if (node.concept === "amr-unknown") return "what";
  if (node.concept === "and" || node.concept === "or") {
    const ops = node.edges
      .filter(([role]) => role.startsWith(":op"))
      .map(([, v]) => realizeEntity(v, byVar));
    if (ops.length === 0) return "nothing";
    if (ops.length === 1) return ops[0];
    const joiner = node.concept === "or" ? "or" : "and";
    return `${ops.slice(0, -1).join(", ")} ${joiner} ${ops[ops.length - 1]}`;
  }
  let quant: string | null = null;
  const mods: string[] = [];
  for (const [role, v] of node.edges) {
    if (role === ":quant" && "literal" in v) quant = v.literal;
    else if (role === ":mod") mods.push(realizeBare(v, byVar));
    else if (/^:ARG\d-of$/.test(role) && "variable" in v && isFrame(v.concept)) {
      mods.push(pastParticiple(frameLemma(v.concept)));
    }
  }
  const head = isFrame(node.concept) ? frameLemma(node.concept) : node.concept;
  const noun = [...mods, head].join(" ");
  if (quant !== null) return `${quant} ${noun}`;
  return `the ${noun}`;
}

function realizeBare(value: AmrValue, byVar: Map<string, AmrNode>): string {
  const text = realizeEntity(value, byVar);
  return text.startsWith("the ") ? text.slice(4) : text;
}

/**
 * Clause realization for instruction-shaped graphs: verb first, :ARG1 as
 * the object, remaining roles as prepositional phrases. amr-unknown
 * realizes as "what" and turns the output into a question; an unknown
 * under :polarity instead prefixes "do you".
 */
function realizeClause(root: AmrNode, byVar: Map<string, AmrNode>): string {
  const parts: string[] = [];
  let polar = false;
  for (const [role, value] of root.edges) {
    if (role === ":mode" || role === ":ARG0") continue;
    if (role === ":polarity") {
      polar = true;
      continue;
    }
    if (role === ":ARG1") {
      parts.push(realizeEntity(value, byVar));
    } else if (role === ":purpose" && "variable" in value && isFrame(value.concept)) {
      parts.push(`to ${realizeClause(value, byVar)}`);
    } else {
      const prep = ROLE_PREPS[role];
      const phrase = realizeEntity(value, byVar);
      parts.push(prep ? `${prep} ${phrase}` : phrase);
    }
  }
  const verb = frameLemma(root.concept);
  const clause = [verb, ...parts].join(" ");
  return polar ? `do you ${clause}` : clause;
}

function realizeGraph(penman: string): string {
  let root: AmrNode;
  try {
    root = parsePenman(penman);
  } catch (err) {
    if (err instanceof PenmanSyntaxError) {
      throw new ModelFault(`not valid PENMAN: ${err.message}`);
    }
    throw err;
  }
  const byVar = new Map(walkNodes(root).map((n) => [n.variable, n]));
  const question = hasUnknown(root);
  const body = isFrame(root.concept)
    ? realizeClause(root, byVar)
    : realizeEntity(root, byVar);
  const text = body[0].toUpperCase() + body.slice(1);
  return text + (question ? "?" : ".");
}

const PARAPHRASE_LEADS = [
  "In this recipe,",
  "Specifically,",
  "Tell me,",
  "To be precise,",
  "Here,",
];

const QG_TEMPLATES = [
  (p: string) => `Which step involves ${p}?`,
  (p: string) => `What part of the recipe mentions ${p}?`,
  (p: string) => `Where in the recipe do you need ${p}?`,
  (p: string) => `When does the recipe call for ${p}?`,
  (p: string) => `Why does the recipe include ${p}?`,
];

function bestSentence(context: string, question: string): string {
  const sentences = context
    .split(/(?<=[.!?])\s+/)
    .map((s) => s.trim())
    .filter((s) => s.length > 0);
  if (sentences.length === 0) throw new ModelFault("empty context");
  const wanted = new Set(words(question).filter((w) => !STOPWORDS.has(w)));
  let best = "";
  let bestScore = 0;
  for (const sentence of sentences) {
    const score = words(sentence).filter((w) => wanted.has(w)).length;
    if (score > bestScore) {
      best = sentence;
      bestScore = score;
    }
  }
  return bestScore > 0 ? best : "The recipe does not specify";
}

class RuleModels implements Models {
  async parse(text: string): Promise<string> {
    return parseInstruction(text);
  }

  async generate(penman: string): Promise<string> {
    if (!penman.trim()) throw new ModelFault("empty graph");
    return realizeGraph(penman);
  }

  async paraphrase(text: string, n: number): Promise<string[]> {
    if (!text.trim()) throw new ModelFault("nothing to paraphrase");
    return PARAPHRASE_LEADS.slice(0, Math.max(n, 0)).map(
      (lead) => `${lead} ${decap(text.trim())}`,
    );
  }

  async qgFromAnswer(context: string, answer: string, n: number): Promise<string[]> {
    if (!context.trim()) throw new ModelFault("empty context");
    const phrase = decap(answer.trim().replace(/[.!?]+$/, ""));
    if (!phrase) throw new ModelFault("empty answer");
    return QG_TEMPLATES.slice(0, Math.max(n, 0)).map((make) => make(phrase));
  }

  async answer(context: string, question: string): Promise<string> {
    if (!question.trim()) throw new ModelFault("empty question");
    return bestSentence(context, question);
  }
}

/**
 * Instantiate the models named in the config. Only the built-in rule/*
 * engines ship with the shim; pointing an endpoint at anything else is a
 * startup failure, not a silent fallback.
 */
export function createModels(config: ShimConfig): Models {
  for (const endpoint of config.enabled) {
    const id = config.models[endpoint as Endpoint];
    if (id !== undefined && !id.startsWith("rule/")) {
      throw new ModelLoadError(
        `cannot load model '${id}' for ${endpoint}: only rule/* engines are built in`,
      );
    }
  }
  return new RuleModels();
}
