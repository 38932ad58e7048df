/**
 * Just enough PENMAN to back a rule model: parse a graph string into a
 * tree with variable references, and print one back out. Inverse roles,
 * re-entrancies and literals survive a round trip; nothing here tries to
 * normalize or validate AMR semantics.
 */

export class PenmanSyntaxError extends Error {}

export interface AmrNode {
  variable: string;
  concept: string;
  edges: Array<[string, AmrValue]>;
}

export type AmrValue =
  | AmrNode
  | { ref: string }
  | { literal: string };

type Token = "(" | ")" | "/" | string;

function tokenize(text: string): Token[] {
  const tokens: Token[] = [];
  let i = 0;
  while (i < text.length) {
    const ch = text[i];
    if (/\s/.test(ch)) {
      i += 1;
    } else if (ch === "(" || ch === ")" || ch === "/") {
      tokens.push(ch);
      i += 1;
    } else if (ch === '"') {
      const end = text.indexOf('"', i + 1);
      if (end < 0) throw new PenmanSyntaxError("unterminated string literal");
      tokens.push(text.slice(i, end + 1));
      i = end + 1;
    } else {
      let j = i;
      while (j < text.length && !/[\s()/]/.test(text[j])) j += 1;
      tokens.push(text.slice(i, j));
      i = j;
    }
  }
  return tokens;
}

export function parsePenman(text: string): AmrNode {
  const tokens = tokenize(text);
  let pos = 0;
  const variables = new Set<string>();

  function expect(tok: Token): void {
    if (tokens[pos] !== tok) {
      throw new PenmanSyntaxError(`expected ${tok} at token ${pos}`);
    }
    pos += 1;
  }

  function parseNode(): AmrNode {
    expect("(");
    const variable = tokens[pos];
    if (variable === undefined || /[()/]/.test(variable)) {
      throw new PenmanSyntaxError("expected a variable after (");
    }
    pos += 1;
    expect("/");
    const concept = tokens[pos];
    if (concept === undefined || /[()/]/.test(concept)) {
      throw new PenmanSyntaxError("expected a concept after /");
    }
    pos += 1;
    variables.add(variable);
    const node: AmrNode = { variable, concept, edges: [] };
    while (tokens[pos] !== ")") {
      const role = tokens[pos];
      if (role === undefined) throw new PenmanSyntaxError("unclosed node");
      if (!role.startsWith(":")) {
        throw new PenmanSyntaxError(`expected a role, got ${role}`);
      }
      pos += 1;
      if (tokens[pos] === "(") {
        node.edges.push([role, parseNode()]);
      } else {
        const atom = tokens[pos];
        if (atom === undefined || /[)/]/.test(atom)) {
          throw new PenmanSyntaxError(`role ${role} has no target`);
        }
        pos += 1;
        node.edges.push([role, { literal: atom }]);
      }
    }
    pos += 1;
    return node;
  }

  const root = parseNode();
  if (pos !== tokens.length) {
    throw new PenmanSyntaxError("trailing tokens after the root node");
  }
  // Bare atoms that name a variable are re-entrant references, not constants.
  const relink = (node: AmrNode): void => {
    node.edges = node.edges.map(([role, value]) => {
      if ("literal" in value && variables.has(value.literal)) {
        return [role, { ref: value.literal }];
      }
      if ("variable" in value) relink(value);
      return [role, value];
    });
  };
  relink(root);
  return root;
}

export function formatPenman(node: AmrNode): string {
  const parts = [`(${node.variable} / ${node.concept}`];
  for (const [role, value] of node.edges) {
    if ("variable" in value) {
      parts.push(` ${role} ${formatPenman(value)}`);
    } else if ("ref" in value) {
      parts.push(` ${role} ${value.ref}`);
    } else {
      parts.push(` ${role} ${value.literal}`);
    }
  }
  return parts.join("") + ")";
}

/** Depth-first list of every node in the tree, root first. */
export function walkNodes(root: AmrNode): AmrNode[] {
  const out: AmrNode[] = [root];
  for (const [, value] of root.edges) {
    if ("variable" in value) out.push(...walkNodes(value));
  }
  return out;
}
