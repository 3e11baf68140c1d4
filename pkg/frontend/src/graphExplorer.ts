// Graph explorer over the exported graph document. Filtering mirrors the
// backend's view filter exactly: the same criteria applied here and there
// must keep the same nodes and edges, so the UI never disagrees with an
// exported view.

import type { GraphDocument, GraphEdge, GraphNode } from "./types.js";

export const SUPPORTED_SCHEMA_VERSION = 1;

export interface FilterCriteria {
  grouping?: string;
  dateFrom?: string;
  dateTo?: string;
  minWeight?: number;
  maxWeight?: number;
  annotator?: string;
  hideNan?: boolean;
  hideExcluded?: boolean;
}

export function loadDocument(document: GraphDocument): GraphDocument {
  if (document.schema_version !== SUPPORTED_SCHEMA_VERSION) {
    throw new Error(
      `unsupported graph document version ${document.schema_version}, ` +
        `expected ${SUPPORTED_SCHEMA_VERSION}`,
    );
  }
  return document;
}

function keepNode(node: GraphNode, criteria: FilterCriteria): boolean {
  if (criteria.grouping !== undefined && node.grouping !== criteria.grouping) return false;
  if (criteria.dateFrom !== undefined && (node.date === null || node.date < criteria.dateFrom)) {
    return false;
  }
  if (criteria.dateTo !== undefined && (node.date === null || node.date > criteria.dateTo)) {
    return false;
  }
  if (criteria.hideExcluded && node.excluded) return false;
  return true;
}

function keepEdge(edge: GraphEdge, kept: Set<string>, criteria: FilterCriteria): boolean {
  if (!kept.has(edge.source) || !kept.has(edge.target)) return false;
  if (criteria.annotator !== undefined && !edge.annotators.includes(criteria.annotator)) {
    return false;
  }
  if (edge.nan || edge.weight === null) {
    return !criteria.hideNan && criteria.minWeight === undefined && criteria.maxWeight === undefined;
  }
  if (criteria.minWeight !== undefined && edge.weight < criteria.minWeight) return false;
  if (criteria.maxWeight !== undefined && edge.weight > criteria.maxWeight) return false;
  return true;
}

export function applyFilter(
  document: GraphDocument,
  criteria: FilterCriteria,
): GraphDocument {
  const nodes = document.nodes.filter((n) => keepNode(n, criteria));
  const kept = new Set(nodes.map((n) => n.use_id));
  const edges = document.edges.filter((e) => keepEdge(e, kept, criteria));
  return { ...document, nodes, edges };
}

/** Cluster sizes over the (possibly filtered) node set, excluded nodes aside. */
export function clusterSizes(document: GraphDocument): Record<string, number> {
  const sizes: Record<string, number> = {};
  for (const node of document.nodes) {
    if (node.cluster < 0) continue;
    sizes[String(node.cluster)] = (sizes[String(node.cluster)] ?? 0) + 1;
  }
  return sizes;
}

export interface StatsDropdown {
  title: string;
  rows: [string, string][];
}

/** The "Stats" dropdown blocks: sense frequency per grouping plus methods. */
export function statsDropdowns(document: GraphDocument): StatsDropdown[] {
  const dropdowns: StatsDropdown[] = [];
  const frequency = document.summary.sense_frequency;
  for (const grouping of Object.keys(frequency).sort()) {
    const { counts, probabilities } = frequency[grouping];
    const rows: [string, string][] = Object.keys(counts)
      .sort((a, b) => Number(a) - Number(b))
      .map((cluster) => {
        const probability =
          probabilities === null ? "undefined" : probabilities[cluster].toFixed(3);
        return [`cluster ${cluster}`, `${counts[cluster]} uses (p=${probability})`];
      });
    dropdowns.push({ title: `Sense frequency: ${grouping}`, rows });
  }
  dropdowns.push({
    title: "Methods",
    rows: [
      ["clustering", document.summary.clustering_method],
      ["layout", document.summary.layout_method],
      ["threshold", String(document.summary.threshold)],
    ],
  });
  return dropdowns;
}
