/** Annotation submit/edit flow.

Holds the view state for the annotate dialog: an empty classification is
rejected locally before any request goes out, server rejections surface as
field-scoped errors, and a revision conflict on edit switches to a distinct
conflict state so the dialog can offer reload-and-retry.
*/

import { ApiError } from "./api.js";
import type { AnnotationDraft, AnnotationPatch, ApiClient } from "./api.js";
import type { Anchor, AnnotationDto } from "./types.js";
import { sanitizeHtml } from "./sanitize.js";

export type ErrorField = "classification" | "anchor" | "content" | "activity" | "general";

export interface FlowError {
  code: string;
  message: string;
  field: ErrorField;
}

export type FlowState =
  | { phase: "idle" }
  | { phase: "submitting" }
  | { phase: "saved"; annotation: AnnotationDto }
  | { phase: "error"; error: FlowError }
  | { phase: "conflict"; currentRevision: number; message: string };

const FIELD_BY_CODE: Record<string, ErrorField> = {
  EMPTY_CLASSIFICATION: "classification",
  NON_FINAL_CONCEPT: "classification",
  UNKNOWN_CONCEPT: "classification",
  ANCHOR_OUT_OF_BOUNDS: "anchor",
  VALIDATION: "content",
  ACTIVITY_NOT_OPEN: "activity",
  AUTHOR_NOT_IN_GROUP: "activity",
};

export function errorFieldFor(code: string): ErrorField {
  return FIELD_BY_CODE[code] ?? "general";
}

export interface SubmitInput {
  anchor: Anchor;
  html: string;
  classification: string[];
}

/** Minimal client surface the flow needs; tests substitute a fake. */
export interface FlowApi {
  createAnnotation(
    activityId: string,
    draft: AnnotationDraft,
    idempotencyKey?: string,
  ): Promise<AnnotationDto>;
  patchAnnotation(
    annotationId: string,
    patch: AnnotationPatch,
    expectedRevision?: number,
  ): Promise<AnnotationDto>;
}

export class AnnotateFlow {
  state: FlowState = { phase: "idle" };
  private readonly api: FlowApi;
  private readonly activityId: string;

  constructor(api: FlowApi | ApiClient, activityId: string) {
    this.api = api;
    this.activityId = activityId;
  }

  reset(): void {
    this.state = { phase: "idle" };
  }

  /** Create an annotation; returns the new annotation or null on error. */
  async submit(input: SubmitInput, idempotencyKey?: string): Promise<AnnotationDto | null> {
    if (input.classification.length === 0) {
      // reject locally: the server would 422 with the same code
      this.state = {
        phase: "error",
        error: {
          code: "EMPTY_CLASSIFICATION",
          message: "pick at least one concept",
          field: "classification",
        },
      };
      return null;
    }
    this.state = { phase: "submitting" };
    const draft: AnnotationDraft = {
      anchor: input.anchor,
      content: [{ type: "rich_text", html: sanitizeHtml(input.html) }],
      classification: input.classification,
    };
    try {
      const annotation = await this.api.createAnnotation(this.activityId, draft, idempotencyKey);
      this.state = { phase: "saved", annotation };
      return annotation;
    } catch (err) {
      this.state = { phase: "error", error: this.toFlowError(err) };
      return null;
    }
  }

  /** Edit an annotation under optimistic concurrency; a stale revision
  parks the flow in the conflict state instead of erroring. */
  async saveEdit(
    annotationId: string,
    patch: AnnotationPatch,
    expectedRevision: number,
  ): Promise<AnnotationDto | null> {
    this.state = { phase: "submitting" };
    const cleaned: AnnotationPatch = { ...patch };
    if (cleaned.content) {
      cleaned.content = cleaned.content.map((block) =>
        block.type === "rich_text" ? { ...block, html: sanitizeHtml(block.html) } : block,
      );
    }
    try {
      const annotation = await this.api.patchAnnotation(annotationId, cleaned, expectedRevision);
      this.state = { phase: "saved", annotation };
      return annotation;
    } catch (err) {
      if (err instanceof ApiError && err.code === "CONFLICT") {
        this.state = {
          phase: "conflict",
          currentRevision: err.currentRevision ?? expectedRevision,
          message: err.message,
        };
        return null;
      }
      this.state = { phase: "error", error: this.toFlowError(err) };
      return null;
    }
  }

  private toFlowError(err: unknown): FlowError {
    if (err instanceof ApiError) {
      return { code: err.code, message: err.message, field: errorFieldFor(err.code) };
    }
    const message = err instanceof Error ? err.message : String(err);
    return { code: "NETWORK", message, field: "general" };
  }
}
