/** Thin fetch client for the ontonote service.

Every response body is parsed as JSON; non-2xx responses raise ApiError
carrying the server's stable error code plus any extras (parse position,
current revision).
*/

import type {
  ActivityDto,
  ActivityReportDto,
  Anchor,
  AnnotationDto,
  CompareReportDto,
  ContentBlock,
  DocumentDto,
  ErrorBody,
  ErrorCatalogEntry,
  ListingDto,
  OntologyDto,
  QueryResultDto,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly line?: number;
  readonly column?: number;
  readonly currentRevision?: number;

  constructor(status: number, body: ErrorBody) {
    super(body.message);
    this.name = "ApiError";
    this.code = body.code;
    this.status = status;
    this.line = body.line;
    this.column = body.column;
    this.currentRevision = body.current_revision;
  }
}

export interface ListOptions {
  q?: string;
  concepts?: string;
  author?: string;
}

export interface AnnotationDraft {
  anchor: Anchor;
  content: ContentBlock[];
  classification: string[];
}

export interface AnnotationPatch {
  anchor?: Anchor;
  content?: ContentBlock[];
  classification?: string[];
}

interface RequestOptions {
  json?: unknown;
  query?: Record<string, string | undefined>;
  headers?: Record<string, string>;
}

export class ApiClient {
  readonly baseUrl: string;
  private token: string;

  constructor(baseUrl: string, token: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.token = token;
  }

  setToken(token: string): void {
    this.token = token;
  }

  /** Raw response bytes plus parsed body; the listing parity check needs bytes. */
  async requestRaw(
    method: string,
    path: string,
    options: RequestOptions = {},
  ): Promise<{ status: number; bytes: Uint8Array; headers: Headers }> {
    let url = this.baseUrl + path;
    if (options.query) {
      const params = new URLSearchParams();
      for (const [key, value] of Object.entries(options.query)) {
        if (value !== undefined) params.set(key, value);
      }
      const qs = params.toString();
      if (qs) url += "?" + qs;
    }
    const headers: Record<string, string> = {
      authorization: `Bearer ${this.token}`,
      ...options.headers,
    };
    let body: string | undefined;
    if (options.json !== undefined) {
      headers["content-type"] = "application/json";
      body = JSON.stringify(options.json);
    }
    const response = await fetch(url, { method, headers, body });
    const bytes = new Uint8Array(await response.arrayBuffer());
    return { status: response.status, bytes, headers: response.headers };
  }

  private async request<T>(
    method: string,
    path: string,
    options: RequestOptions = {},
  ): Promise<T> {
    const { status, bytes } = await this.requestRaw(method, path, options);
    const text = new TextDecoder().decode(bytes);
    const parsed = text ? JSON.parse(text) : null;
    if (status >= 400) {
      throw new ApiError(status, parsed as ErrorBody);
    }
    return parsed as T;
  }

  listErrors(): Promise<{ errors: ErrorCatalogEntry[] }> {
    return this.request("GET", "/meta/errors");
  }

  getActivity(activityId: string): Promise<ActivityDto> {
    return this.request("GET", `/activities/${encodeURIComponent(activityId)}`);
  }

  getDocument(documentId: string): Promise<DocumentDto> {
    return this.request("GET", `/documents/${encodeURIComponent(documentId)}`);
  }

  getOntology(ontologyId: string): Promise<OntologyDto> {
    return this.request("GET", `/ontologies/${encodeURIComponent(ontologyId)}`);
  }

  listAnnotations(
    activityId: string,
    options: ListOptions = {},
  ): Promise<ListingDto | QueryResultDto> {
    return this.request(
      "GET",
      `/activities/${encodeURIComponent(activityId)}/annotations`,
      { query: { q: options.q, concepts: options.concepts, author: options.author } },
    );
  }

  createAnnotation(
    activityId: string,
    draft: AnnotationDraft,
    idempotencyKey?: string,
  ): Promise<AnnotationDto> {
    const headers: Record<string, string> = {};
    if (idempotencyKey) headers["x-idempotency-key"] = idempotencyKey;
    return this.request(
      "POST",
      `/activities/${encodeURIComponent(activityId)}/annotations`,
      { json: draft, headers },
    );
  }

  patchAnnotation(
    annotationId: string,
    patch: AnnotationPatch,
    expectedRevision?: number,
  ): Promise<AnnotationDto> {
    const headers: Record<string, string> = {};
    if (expectedRevision !== undefined) {
      headers["expected-revision"] = String(expectedRevision);
    }
    return this.request(
      "PATCH",
      `/annotations/${encodeURIComponent(annotationId)}`,
      { json: patch, headers },
    );
  }

  propose(
    activityId: string,
    parent: string,
    name: string,
  ): Promise<{ id: string; snapshot_revision: number; concept: { id: string; name: string; parent: string } }> {
    return this.request(
      "POST",
      `/activities/${encodeURIComponent(activityId)}/proposals`,
      { json: { parent, name } },
    );
  }

  getReport(
    activityId: string,
    options: { width?: number; level?: number } = {},
  ): Promise<ActivityReportDto> {
    return this.request(
      "GET",
      `/activities/${encodeURIComponent(activityId)}/report`,
      {
        query: {
          width: options.width !== undefined ? String(options.width) : undefined,
          level: options.level !== undefined ? String(options.level) : undefined,
        },
      },
    );
  }

  compare(
    before: Record<string, number>,
    after: Record<string, number>,
    width?: number,
  ): Promise<CompareReportDto> {
    const json: Record<string, unknown> = { before, after };
    if (width !== undefined) json.width = width;
    return this.request("POST", "/reports/compare", { json });
  }
}
