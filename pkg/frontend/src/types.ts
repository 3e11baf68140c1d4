// Payload shapes of the REST API and the versioned graph document.

export interface Credentials {
  name: string;
  token: string;
}

export interface UsePayload {
  use_id: string;
  lemma: string;
  context: string;
  span: string; // "start:end", end exclusive
  target: string;
  grouping: string | null;
  date: string | null;
}

export interface NextInstance {
  done: boolean;
  remaining: number;
  instance_id?: string;
  first?: UsePayload;
  second?: UsePayload;
}

export interface TutorialInstance {
  id: string;
  lemma: string;
  context1: string;
  span1: string;
  context2: string;
  span2: string;
}

export interface TutorialResult {
  passed: boolean;
  spearman: number | null;
  mad: number;
}

export interface GraphNode {
  use_id: string;
  x: number;
  y: number;
  cluster: number;
  color: number;
  grouping: string | null;
  date: string | null;
  excluded: boolean;
}

export interface GraphEdge {
  source: string;
  target: string;
  weight: number | null; // null encodes an undecidable (all cannot-decide) edge
  high: boolean | null;
  nan: boolean;
  annotators: string[];
}

export interface GraphDocument {
  schema_version: number;
  lemma: string;
  nodes: GraphNode[];
  edges: GraphEdge[];
  summary: {
    cluster_sizes: Record<string, number>;
    sense_frequency: Record<
      string,
      { counts: Record<string, number>; probabilities: Record<string, number> | null }
    >;
    clustering_method: string;
    layout_method: string;
    seed: number;
    threshold: number;
  };
}

export interface TaskStatus {
  task_id: string;
  project_id: string;
  word: string;
  annotator: string;
  status: "queued" | "running" | "done" | "failed";
  done: number;
  total: number;
  error: string;
}
