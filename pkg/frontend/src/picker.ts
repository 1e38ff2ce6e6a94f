/** Concept tree picker over an activity snapshot.

Two modes: "classify" restricts selection to final concepts (no children and
not extensible), matching what the service accepts in a classification;
"filter" allows any concept, since query literals close over descendants.
Extensible concepts expose a proposal affordance even when childless.
*/

import type { ConceptDto, OntologyDto } from "./types.js";

export type PickerMode = "classify" | "filter";

export interface PickerRow {
  concept: ConceptDto;
  depth: number;
  final: boolean;
  expanded: boolean;
  selected: boolean;
  selectable: boolean;
  canProposeUnder: boolean;
  proposedBy?: string;
}

export function isFinal(concept: ConceptDto): boolean {
  return concept.children.length === 0 && !concept.extensible;
}

export class OntologyPicker {
  readonly root: ConceptDto;
  readonly mode: PickerMode;
  private readonly byId = new Map<string, ConceptDto>();
  private readonly parents = new Map<string, string>();
  private readonly expandedIds = new Set<string>();
  private readonly selectedIds = new Set<string>();

  constructor(ontology: OntologyDto | ConceptDto, mode: PickerMode) {
    this.root = "root" in ontology ? ontology.root : ontology;
    this.mode = mode;
    const index = (c: ConceptDto): void => {
      this.byId.set(c.id, c);
      for (const child of c.children) {
        this.parents.set(child.id, c.id);
        index(child);
      }
    };
    index(this.root);
    this.expandedIds.add(this.root.id);
  }

  concept(id: string): ConceptDto {
    const found = this.byId.get(id);
    if (!found) throw new Error(`unknown concept ${id}`);
    return found;
  }

  toggle(id: string): void {
    this.concept(id);
    if (this.expandedIds.has(id)) this.expandedIds.delete(id);
    else this.expandedIds.add(id);
  }

  expandAll(): void {
    for (const id of this.byId.keys()) this.expandedIds.add(id);
  }

  selectable(id: string): boolean {
    const c = this.concept(id);
    return this.mode === "filter" || isFinal(c);
  }

  /** Returns false (and leaves the selection alone) for non-final concepts
  in classify mode; the flow never sends those to the server. */
  select(id: string): boolean {
    if (!this.selectable(id)) return false;
    this.selectedIds.add(id);
    return true;
  }

  deselect(id: string): void {
    this.selectedIds.delete(id);
  }

  selection(): string[] {
    return [...this.selectedIds];
  }

  clearSelection(): void {
    this.selectedIds.clear();
  }

  canProposeUnder(id: string): boolean {
    return this.concept(id).extensible;
  }

  /** Concept names from the root down to the concept, inclusive. */
  pathNames(id: string): string[] {
    const names: string[] = [];
    let cursor: string | undefined = id;
    while (cursor !== undefined) {
      names.unshift(this.concept(cursor).name);
      cursor = this.parents.get(cursor);
    }
    return names;
  }

  /** Rows to render, preorder, honoring collapsed subtrees. */
  rows(): PickerRow[] {
    const out: PickerRow[] = [];
    const walk = (c: ConceptDto, depth: number): void => {
      const expanded = this.expandedIds.has(c.id);
      out.push({
        concept: c,
        depth,
        final: isFinal(c),
        expanded,
        selected: this.selectedIds.has(c.id),
        selectable: this.selectable(c.id),
        canProposeUnder: c.extensible,
        proposedBy: c.proposed_by,
      });
      if (expanded) {
        for (const child of c.children) walk(child, depth + 1);
      }
    };
    walk(this.root, 0);
    return out;
  }
}
