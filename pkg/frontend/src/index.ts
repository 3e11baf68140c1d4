export { ApiClient, ApiError } from "./api.js";
export { AnnotationScreen } from "./annotation.js";
export { TutorialFlow } from "./tutorial.js";
export { DataTable } from "./tables.js";
export {
  applyFilter,
  clusterSizes,
  loadDocument,
  statsDropdowns,
  SUPPORTED_SCHEMA_VERSION,
} from "./graphExplorer.js";
export { CANNOT_DECIDE, SCALE, VALID_LABELS, scaleLabel, splitContext } from "./scale.js";
export type * from "./types.js";
