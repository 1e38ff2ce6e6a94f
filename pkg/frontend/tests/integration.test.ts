/** End-to-end parity against a live service on the demo store.

Covers the acceptance bar for the web client: a query assembled in the
builder returns byte-identical results to the CLI on the same store, page
anchors survive select -> render -> reselect, and both annotation rejection
cases surface as renderable field errors.
*/

import { execFile as execFileCb, spawn } from "node:child_process";
import type { ChildProcess } from "node:child_process";
import { mkdtemp, rm } from "node:fs/promises";
import net from "node:net";
import os from "node:os";
import path from "node:path";
import { promisify } from "node:util";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { AnnotateFlow } from "../src/annotateFlow.js";
import { ApiClient, ApiError } from "../src/api.js";
import { OntologyPicker } from "../src/picker.js";
import { QueryBuilder, conceptListText } from "../src/queryBuilder.js";
import { TextReaderModel } from "../src/reader.js";
import { sanitizeHtml } from "../src/sanitize.js";
import type { QueryResultDto } from "../src/types.js";

const execFile = promisify(execFileCb);

const PYTHON = process.env.PYTHON ?? "python3";

let root: string;
let server: ChildProcess;
let baseUrl: string;
let serverLog = "";
let prof: ApiClient;
let student: ApiClient;

interface DemoIds {
  instructor: string;
  group: string;
  document: string;
  ontology: string;
  activity: string;
}
let ids: DemoIds;

async function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = net.createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address() as net.AddressInfo;
      probe.close(() => resolve(address.port));
    });
  });
}

async function waitForServer(url: string, timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const response = await fetch(url + "/meta/errors");
      if (response.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      throw new Error(`service did not come up at ${url}\n${serverLog}`);
    }
    await new Promise((r) => setTimeout(r, 150));
  }
}

function cliQueryRun(args: string[]): Promise<Buffer> {
  return execFile(
    PYTHON,
    ["-m", "ontonote.cli", "--root", root, "query", "run", ...args],
    { encoding: "buffer" },
  ).then(({ stdout }) => stdout);
}

beforeAll(async () => {
  root = await mkdtemp(path.join(os.tmpdir(), "ontonote-web-"));
  const seeded = await execFile(PYTHON, ["-m", "ontonote.demo", root]);
  ids = JSON.parse(seeded.stdout) as DemoIds;
  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}`;
  server = spawn(PYTHON, [
    "-m",
    "ontonote.cli",
    "--root",
    root,
    "serve",
    "--addr",
    `127.0.0.1:${port}`,
  ]);
  server.stderr?.on("data", (chunk: Buffer) => {
    serverLog += chunk.toString();
  });
  server.stdout?.on("data", (chunk: Buffer) => {
    serverLog += chunk.toString();
  });
  await waitForServer(baseUrl, 30_000);
  prof = new ApiClient(baseUrl, "tok-prof");
  student = new ApiClient(baseUrl, "tok-s1");
});

afterAll(async () => {
  if (server && !server.killed) {
    server.kill("SIGTERM");
    await new Promise((r) => setTimeout(r, 300));
  }
  if (root) await rm(root, { recursive: true, force: true });
});

describe("query builder vs CLI", () => {
  it("a builder query returns byte-identical results to the CLI", async () => {
    const activity = await prof.getActivity(ids.activity);
    const picker = new OntologyPicker(activity.snapshot, "filter");
    const builder = new QueryBuilder();
    const narrative = builder.addCriterion("Narrative");
    builder.addLiteral(narrative, "+", picker.pathNames("c4"), "c4");
    builder.addLiteral(narrative, "-", picker.pathNames("c6"), "c6");
    const criticism = builder.addCriterion("Criticism");
    builder.addLiteral(criticism, "+", picker.pathNames("c8"), "c8");
    builder.addLiteral(criticism, "-", picker.pathNames("c2"), "c2");
    const text = builder.serialize();

    const http = await prof.requestRaw(
      "GET",
      `/activities/${ids.activity}/annotations`,
      { query: { q: text } },
    );
    expect(http.status).toBe(200);
    const cliBytes = await cliQueryRun(["--activity", ids.activity, "--q", text]);
    expect(Buffer.from(http.bytes).equals(cliBytes)).toBe(true);

    const result = JSON.parse(Buffer.from(http.bytes).toString()) as QueryResultDto;
    expect(result.annotations.map((a) => a.id)).toEqual(["a1", "a4", "a6"]);
    expect(result.query.criteria.map((c) => c.name)).toEqual(["Narrative", "Criticism"]);
  });

  it("a picker selection in concepts mode matches the CLI too", async () => {
    const activity = await prof.getActivity(ids.activity);
    const picker = new OntologyPicker(activity.snapshot, "filter");
    picker.select("c11");
    picker.select("c3");
    const text = conceptListText(picker.selection().map((id) => picker.pathNames(id)));

    const http = await prof.requestRaw(
      "GET",
      `/activities/${ids.activity}/annotations`,
      { query: { concepts: text } },
    );
    expect(http.status).toBe(200);
    const cliBytes = await cliQueryRun(["--activity", ids.activity, "--concepts", text]);
    expect(Buffer.from(http.bytes).equals(cliBytes)).toBe(true);

    const result = JSON.parse(Buffer.from(http.bytes).toString()) as QueryResultDto;
    expect(result.annotations.map((a) => a.id)).toEqual(["a3", "a6"]);
  });

  it("the echo loads back into the builder and reproduces the same bytes", async () => {
    const activity = await prof.getActivity(ids.activity);
    const picker = new OntologyPicker(activity.snapshot, "filter");
    const builder = new QueryBuilder();
    builder.addCriterion("Narrative");
    builder.addLiteral(0, "+", picker.pathNames("c4"));
    builder.addLiteral(0, "-", picker.pathNames("c6"));
    const first = await prof.requestRaw(
      "GET",
      `/activities/${ids.activity}/annotations`,
      { query: { q: builder.serialize() } },
    );
    const echoed = (JSON.parse(Buffer.from(first.bytes).toString()) as QueryResultDto).query;

    const rebuilt = new QueryBuilder();
    rebuilt.loadEcho(echoed);
    expect(rebuilt.serialize()).toBe(echoed.text);

    const second = await prof.requestRaw(
      "GET",
      `/activities/${ids.activity}/annotations`,
      { query: { q: rebuilt.serialize() } },
    );
    expect(Buffer.from(second.bytes).equals(Buffer.from(first.bytes))).toBe(true);
  });
});

describe("reader anchoring against the live document", () => {
  it("a text selection posts, echoes, and reselects identically", async () => {
    const doc = await student.getDocument(ids.document);
    if (doc.body.type !== "text") throw new Error("demo document should be text");
    const reader = new TextReaderModel(doc.body.text);

    const anchor = reader.anchorFromSelection(5, 25);
    expect(anchor).not.toBeNull();
    const flow = new AnnotateFlow(student, ids.activity);
    const saved = await flow.submit({
      anchor: anchor!,
      html: "<p>from the web client</p>",
      classification: ["c4"],
    });
    expect(flow.state.phase).toBe("saved");
    expect(saved!.anchor).toEqual(anchor);
    if (saved!.anchor.type !== "text_span") throw new Error("expected a text span back");

    // Re-render the stored anchor and reselect: same anchor again.
    const selection = reader.selectionFromAnchor(saved!.anchor);
    const reselected = reader.anchorFromSelection(selection.start, selection.end);
    expect(reselected).toEqual(anchor);
  });

  it("a stale edit parks the flow in conflict with the current revision", async () => {
    const flow = new AnnotateFlow(student, ids.activity);
    const doc = await student.getDocument(ids.document);
    if (doc.body.type !== "text") throw new Error("demo document should be text");
    const reader = new TextReaderModel(doc.body.text);
    const saved = await flow.submit({
      anchor: reader.anchorFromSelection(30, 48)!,
      html: "<p>first draft</p>",
      classification: ["c5"],
    });
    expect(saved).not.toBeNull();

    // First edit against revision 0 succeeds and bumps the revision.
    const edited = await flow.saveEdit(saved!.id, { content: [{ type: "rich_text", html: "<p>second draft</p>" }] }, 0);
    expect(edited).not.toBeNull();

    // Replaying the same expected revision must now conflict.
    await flow.saveEdit(saved!.id, { content: [{ type: "rich_text", html: "<p>third draft</p>" }] }, 0);
    expect(flow.state).toMatchObject({ phase: "conflict", currentRevision: 1 });
  });
});

describe("rejection cases render as field errors", () => {
  it("an empty classification is rejected locally, and by the server with the same code", async () => {
    const flow = new AnnotateFlow(student, ids.activity);
    const result = await flow.submit({
      anchor: { type: "text_span", start: 0, end: 4 },
      html: "<p>x</p>",
      classification: [],
    });
    expect(result).toBeNull();
    expect(flow.state).toMatchObject({
      phase: "error",
      error: { code: "EMPTY_CLASSIFICATION", field: "classification" },
    });

    // Bypassing the precheck hits the server's identical rejection.
    await expect(
      student.createAnnotation(ids.activity, {
        anchor: { type: "text_span", start: 0, end: 4 },
        content: [{ type: "rich_text", html: "<p>x</p>" }],
        classification: [],
      }),
    ).rejects.toMatchObject({ code: "EMPTY_CLASSIFICATION", status: 422 });
  });

  it("a non-final concept comes back as a classification field error", async () => {
    const flow = new AnnotateFlow(student, ids.activity);
    const result = await flow.submit({
      anchor: { type: "text_span", start: 0, end: 4 },
      html: "<p>x</p>",
      classification: ["c2"],
    });
    expect(result).toBeNull();
    expect(flow.state).toMatchObject({
      phase: "error",
      error: { code: "NON_FINAL_CONCEPT", field: "classification" },
    });
    if (flow.state.phase === "error") {
      expect(flow.state.error.message.length).toBeGreaterThan(0);
    }
  });
});

describe("sanitizer parity with the live server", () => {
  it("stores exactly what the client-side sanitizer predicts", async () => {
    const dirty = [
      '<p onclick="x">hi<script>alert(1)</script></p><img src="https://i/x.png">',
      "<div><em>neu</em></div>",
      '<a href="javascript:alert(1)">l</a> &amp; <a href="https://ok/x">k</a>',
      "plain text with <unknown>tags</unknown> & entities &hellip;",
    ];
    for (const html of dirty) {
      const saved = await student.createAnnotation(ids.activity, {
        anchor: { type: "text_span", start: 0, end: 4 },
        content: [{ type: "rich_text", html }],
        classification: ["c4"],
      });
      const block = saved.content[0]!;
      if (block.type !== "rich_text") throw new Error("expected rich text back");
      expect(block.html).toBe(sanitizeHtml(html));
    }
  });

  it("replays an idempotent create with identical body", async () => {
    const draft = {
      anchor: { type: "text_span", start: 2, end: 9 } as const,
      content: [{ type: "rich_text", html: "<p>idem</p>" } as const],
      classification: ["c9"],
    };
    const first = await student.createAnnotation(ids.activity, draft, "web-idem-1");
    const replay = await student.createAnnotation(ids.activity, draft, "web-idem-1");
    expect(replay).toEqual(first);
  });
});

describe("error catalog", () => {
  it("serves the catalog without auth context issues", async () => {
    const catalog = await prof.listErrors();
    const codes = catalog.errors.map((e) => e.code);
    expect(codes).toContain("EMPTY_CLASSIFICATION");
    expect(codes).toContain("NON_FINAL_CONCEPT");
    expect(codes).toContain("CONFLICT");
    expect([...codes].sort()).toEqual(codes);
  });

  it("propose adds a selectable final under the extensible concept", async () => {
    const result = await student.propose(ids.activity, "Analysis/Autre", "Symbolisme");
    expect(result.concept.name).toBe("Symbolisme");
    expect(result.concept.parent).toBe("c12");
    const activity = await student.getActivity(ids.activity);
    const picker = new OntologyPicker(activity.snapshot, "classify");
    expect(picker.selectable(result.concept.id)).toBe(true);
    expect(picker.canProposeUnder("c12")).toBe(true);
    picker.expandAll();
    const row = picker.rows().find((r) => r.concept.id === result.concept.id);
    expect(row?.proposedBy).toBe("s1");
  });
});
