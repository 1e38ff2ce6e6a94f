export * from "./types.js";
export { ApiClient, ApiError } from "./api.js";
export type { AnnotationDraft, AnnotationPatch, ListOptions } from "./api.js";
export {
  TextReaderModel,
  PagedReaderModel,
  utf16ToCodepoint,
  codepointToUtf16,
  codepointLength,
  round4,
} from "./reader.js";
export type { PixelRect } from "./reader.js";
export { OntologyPicker, isFinal } from "./picker.js";
export type { PickerMode, PickerRow } from "./picker.js";
export {
  QueryBuilder,
  formatName,
  formatPath,
  conceptListText,
} from "./queryBuilder.js";
export type { CriterionDraft, LiteralChip } from "./queryBuilder.js";
export { AnnotateFlow, errorFieldFor } from "./annotateFlow.js";
export type { FlowError, FlowState, SubmitInput } from "./annotateFlow.js";
export { sanitizeHtml, escapeHtml, safeUri, decodeEntities } from "./sanitize.js";
