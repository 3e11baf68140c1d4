// Sortable table helper for the concordance and judgment views. Sorting is
// delegated to the service (single source of truth); this module only tracks
// the sort state and re-fetches.

import { ApiClient } from "./api.js";

export class DataTable {
  rows: Record<string, unknown>[] = [];
  sortBy = "";
  descending = false;

  constructor(
    private readonly api: ApiClient,
    private readonly projectId: string,
    private readonly word: string,
    private readonly kind: "uses" | "judgments",
  ) {}

  async refresh(): Promise<void> {
    this.rows = await this.api.dataTable(
      this.projectId,
      this.word,
      this.kind,
      this.sortBy,
      this.descending,
    );
  }

  /** Click on a column header: first click sorts ascending, second flips. */
  async sortOn(column: string): Promise<void> {
    if (this.sortBy === column) {
      this.descending = !this.descending;
    } else {
      this.sortBy = column;
      this.descending = false;
    }
    await this.refresh();
  }
}
