/** Builds criterion-query text from chips.

serialize() emits the same canonical form the service echoes back: full
root paths, single spaces between literals, "; " between criteria, and a
"Name: " prefix on named criteria.  Names are quoted exactly as the server
quotes them, so a built query and its echo round-trip to identical text.
*/

import type { QueryEchoDto } from "./types.js";

// Characters that force quoting: query punctuation plus whitespace
// (including the non-ASCII whitespace the server treats as spacing).
const QUOTE_FORCING = new RegExp(
  "[\\[\\],*+\\-;:/\"\\t\\n\\x0B\\f\\r\\x1C-\\x1F \\x85\\xA0\\u1680" +
    "\\u2000-\\u200A\\u2028\\u2029\\u202F\\u205F\\u3000]",
);

export function formatName(name: string): string {
  if (QUOTE_FORCING.test(name)) {
    return '"' + name.replace(/"/g, '""') + '"';
  }
  return name;
}

/** Slash path text for a root-to-concept name trail. */
export function formatPath(names: string[]): string {
  return names.map(formatName).join("/");
}

/** Comma list for the concepts= filter parameter. */
export function conceptListText(paths: string[][]): string {
  return paths.map(formatPath).join(",");
}

export interface LiteralChip {
  sign: "+" | "-";
  /** Formatted path text, quoted where needed. */
  path: string;
  /** Concept id when known (picker-sourced or echoed). */
  concept?: string;
}

export interface CriterionDraft {
  name: string;
  literals: LiteralChip[];
}

export class QueryBuilder {
  criteria: CriterionDraft[] = [];

  addCriterion(name = ""): number {
    this.criteria.push({ name, literals: [] });
    return this.criteria.length - 1;
  }

  removeCriterion(index: number): void {
    this.criteria.splice(index, 1);
  }

  renameCriterion(index: number, name: string): void {
    const criterion = this.criterion(index);
    criterion.name = name;
  }

  /** Add a literal from a picker path (root-to-concept names). */
  addLiteral(index: number, sign: "+" | "-", pathNames: string[], concept?: string): void {
    this.criterion(index).literals.push({ sign, path: formatPath(pathNames), concept });
  }

  /** Add a literal whose path text is already formatted (echo round-trips). */
  addLiteralText(index: number, sign: "+" | "-", path: string, concept?: string): void {
    this.criterion(index).literals.push({ sign, path, concept });
  }

  toggleSign(index: number, literalIndex: number): void {
    const literal = this.literal(index, literalIndex);
    literal.sign = literal.sign === "+" ? "-" : "+";
  }

  removeLiteral(index: number, literalIndex: number): void {
    this.criterion(index).literals.splice(literalIndex, 1);
  }

  isEmpty(): boolean {
    return this.criteria.every((c) => c.literals.length === 0);
  }

  /** Canonical query text; criteria with no literals are skipped. */
  serialize(): string {
    const parts: string[] = [];
    for (const criterion of this.criteria) {
      if (criterion.literals.length === 0) continue;
      const body = criterion.literals.map((l) => l.sign + l.path).join(" ");
      parts.push(criterion.name ? `${formatName(criterion.name)}: ${body}` : body);
    }
    return parts.join("; ");
  }

  /** Rebuild the chips from a server echo. */
  loadEcho(echo: QueryEchoDto): void {
    this.criteria = echo.criteria.map((criterion) => ({
      name: criterion.name,
      literals: criterion.literals.map((literal) => ({
        sign: literal.sign,
        path: literal.path,
        concept: literal.concept,
      })),
    }));
  }

  private criterion(index: number): CriterionDraft {
    const criterion = this.criteria[index];
    if (!criterion) throw new Error(`no criterion at index ${index}`);
    return criterion;
  }

  private literal(index: number, literalIndex: number): LiteralChip {
    const literal = this.criterion(index).literals[literalIndex];
    if (!literal) throw new Error(`no literal at index ${literalIndex}`);
    return literal;
  }
}
