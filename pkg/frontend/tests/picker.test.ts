import { describe, expect, it } from "vitest";

import { OntologyPicker, isFinal } from "../src/picker.js";
import type { ConceptDto } from "../src/types.js";

function concept(
  id: string,
  name: string,
  children: ConceptDto[] = [],
  extensible = false,
): ConceptDto {
  return { id, name, extensible, children };
}

// Literary-analysis taxonomy used by the demo store: c12 is extensible.
function demoTree(): ConceptDto {
  return concept("c1", "Analysis", [
    concept("c2", "Structure", [
      concept("c3", "Structure_type", [
        concept("c4", "Narration"),
        concept("c5", "Use_Of_frames"),
      ]),
      concept("c6", "Plot"),
      concept("c7", "Setting"),
    ]),
    concept("c8", "Criticism", [
      concept("c9", "Bibliographical"),
      concept("c10", "Psychological"),
      concept("c11", "Cultural"),
    ]),
    concept("c12", "Autre", [], true),
  ]);
}

describe("isFinal", () => {
  it("requires no children and no extensibility", () => {
    expect(isFinal(concept("x", "Leaf"))).toBe(true);
    expect(isFinal(concept("x", "Parent", [concept("y", "Child")]))).toBe(false);
    expect(isFinal(concept("x", "Open", [], true))).toBe(false);
  });
});

describe("OntologyPicker in classify mode", () => {
  it("only final concepts are selectable", () => {
    const picker = new OntologyPicker(demoTree(), "classify");
    expect(picker.selectable("c4")).toBe(true);
    expect(picker.selectable("c11")).toBe(true);
    expect(picker.selectable("c1")).toBe(false);
    expect(picker.selectable("c3")).toBe(false);
    // extensible and childless is still an intermediate
    expect(picker.selectable("c12")).toBe(false);
  });

  it("select refuses non-final concepts and leaves the selection alone", () => {
    const picker = new OntologyPicker(demoTree(), "classify");
    expect(picker.select("c2")).toBe(false);
    expect(picker.selection()).toEqual([]);
    expect(picker.select("c4")).toBe(true);
    expect(picker.select("c11")).toBe(true);
    expect(picker.selection()).toEqual(["c4", "c11"]);
    picker.deselect("c4");
    expect(picker.selection()).toEqual(["c11"]);
  });
});

describe("OntologyPicker in filter mode", () => {
  it("any concept is selectable, including intermediates", () => {
    const picker = new OntologyPicker(demoTree(), "filter");
    expect(picker.selectable("c2")).toBe(true);
    expect(picker.selectable("c12")).toBe(true);
    expect(picker.select("c2")).toBe(true);
    expect(picker.selection()).toEqual(["c2"]);
  });
});

describe("OntologyPicker tree", () => {
  it("exposes proposal affordances on extensible concepts only", () => {
    const picker = new OntologyPicker(demoTree(), "classify");
    expect(picker.canProposeUnder("c12")).toBe(true);
    expect(picker.canProposeUnder("c2")).toBe(false);
    expect(picker.canProposeUnder("c4")).toBe(false);
  });

  it("builds root-to-concept path names", () => {
    const picker = new OntologyPicker(demoTree(), "classify");
    expect(picker.pathNames("c4")).toEqual([
      "Analysis",
      "Structure",
      "Structure_type",
      "Narration",
    ]);
    expect(picker.pathNames("c1")).toEqual(["Analysis"]);
    expect(() => picker.pathNames("nope")).toThrow(/unknown concept/);
  });

  it("renders collapsed rows until subtrees are expanded", () => {
    const picker = new OntologyPicker(demoTree(), "classify");
    expect(picker.rows().map((r) => r.concept.id)).toEqual(["c1", "c2", "c8", "c12"]);
    picker.toggle("c2");
    expect(picker.rows().map((r) => r.concept.id)).toEqual([
      "c1",
      "c2",
      "c3",
      "c6",
      "c7",
      "c8",
      "c12",
    ]);
    picker.expandAll();
    expect(picker.rows().map((r) => r.concept.id)).toEqual([
      "c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9", "c10", "c11", "c12",
    ]);
    expect(picker.rows().map((r) => r.depth)).toEqual([0, 1, 2, 3, 3, 2, 2, 1, 2, 2, 2, 1]);
  });

  it("marks proposed concepts with their proposer", () => {
    const tree = demoTree();
    const autre = tree.children[2]!;
    autre.children.push({
      id: "c13",
      name: "Symbolisme",
      extensible: false,
      proposed_by: "s2",
      proposed_at: "2026-08-16T00:00:00Z",
      children: [],
    });
    const picker = new OntologyPicker(tree, "classify");
    picker.expandAll();
    const row = picker.rows().find((r) => r.concept.id === "c13");
    expect(row).toBeDefined();
    expect(row!.proposedBy).toBe("s2");
    expect(row!.final).toBe(true);
    expect(picker.selectable("c13")).toBe(true);
  });

  it("accepts a full ontology document as input", () => {
    const picker = new OntologyPicker(
      {
        id: "ont1",
        owner: "prof",
        visibility: "public",
        revision: 0,
        next_ordinal: 13,
        root: demoTree(),
      },
      "filter",
    );
    expect(picker.rows()[0]!.concept.id).toBe("c1");
  });
});
