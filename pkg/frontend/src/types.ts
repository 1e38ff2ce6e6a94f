/** Wire types for the ontonote HTTP API. */

export interface ConceptDto {
  id: string;
  name: string;
  extensible: boolean;
  proposed_by?: string;
  proposed_at?: string;
  children: ConceptDto[];
}

export interface OntologyDto {
  id: string;
  owner: string;
  visibility: "private" | "public";
  revision: number;
  next_ordinal: number;
  root: ConceptDto;
}

export interface TextSpanAnchor {
  type: "text_span";
  start: number;
  end: number;
}

export interface PageRegionAnchor {
  type: "page_region";
  page: number;
  x: number;
  y: number;
  w: number;
  h: number;
}

export type Anchor = TextSpanAnchor | PageRegionAnchor;

export interface RichTextBlock {
  type: "rich_text";
  html: string;
}

export interface MediaBlock {
  type: "media";
  kind: string;
  uri: string;
}

export interface LinkBlock {
  type: "link";
  uri: string;
  label: string;
}

export type ContentBlock = RichTextBlock | MediaBlock | LinkBlock;

export interface AnnotationDto {
  id: string;
  activity_id: string;
  author: string;
  anchor: Anchor;
  content: ContentBlock[];
  classification: string[];
  created: string;
  updated: string;
}

export interface PageDto {
  width: number;
  height: number;
  image: string;
}

export type DocumentBody =
  | { type: "text"; text: string }
  | { type: "paged"; pages: PageDto[] };

export interface DocumentDto {
  id: string;
  title: string;
  source: { kind: string; uri?: string };
  body: DocumentBody;
}

export interface ActivityDto {
  id: string;
  title: string;
  document_id: string;
  group_id: string;
  owner: string;
  state: "draft" | "open" | "closed" | "archived";
  group_visible: boolean;
  snapshot: OntologyDto;
}

export interface QueryLiteralDto {
  sign: "+" | "-";
  concept: string;
  path: string;
}

export interface QueryCriterionDto {
  name: string;
  literals: QueryLiteralDto[];
}

export interface QueryEchoDto {
  text: string;
  criteria: QueryCriterionDto[];
}

export interface ListingDto {
  annotations: AnnotationDto[];
}

export interface QueryResultDto {
  query: QueryEchoDto;
  annotations: AnnotationDto[];
}

export interface MeanCiDto {
  n: number;
  mean: number;
  level: number;
  lo: number;
  hi: number;
}

export interface TestResultDto {
  test: string;
  statistics: Record<string, number>;
  sample_sizes: Record<string, number>;
  p_value: number;
  method: string;
  ties: boolean;
  z_value: number | null;
}

export interface ActivityReportDto {
  activity_id: string;
  title: string;
  state: string;
  group_id: string;
  students: number;
  annotations: number;
  counts_per_student: Record<string, number>;
  histogram?: Record<string, unknown>;
  mean_ci?: MeanCiDto;
  coverage: Record<string, unknown>;
  proposals: Record<string, unknown>;
  grades?: {
    n: number;
    mean_ci: MeanCiDto;
    per_student: Record<string, number>;
  };
}

export interface CompareReportDto {
  n_before: number;
  n_after: number;
  pairs: number;
  mann_whitney: TestResultDto;
  wilcoxon: TestResultDto;
  differences: {
    mean_ci: MeanCiDto;
    histogram: Record<string, unknown>;
  };
}

export interface ErrorCatalogEntry {
  code: string;
  http_status: number;
  description: string;
}

/** Flat error body: {code, message} plus code-specific extras. */
export interface ErrorBody {
  code: string;
  message: string;
  line?: number;
  column?: number;
  current_revision?: number;
}
