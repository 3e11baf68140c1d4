// Thin typed client for the annotation service. All state lives server-side;
// this module only shapes requests and narrows responses.

import type {
  Credentials,
  GraphDocument,
  NextInstance,
  TaskStatus,
  TutorialInstance,
  TutorialResult,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public readonly status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  private credentials: Credentials | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  setCredentials(credentials: Credentials): void {
    this.credentials = credentials;
  }

  private headers(json = true): Record<string, string> {
    const headers: Record<string, string> = json
      ? { "Content-Type": "application/json" }
      : {};
    if (this.credentials) {
      headers["X-Annotator"] = this.credentials.name;
      headers["X-Token"] = this.credentials.token;
    }
    return headers;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        detail = body.detail ?? body.errors?.join("; ") ?? detail;
      } catch {
        // non-JSON error body, keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  async register(name: string): Promise<Credentials> {
    const credentials = await this.request<Credentials>("/annotators", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ name }),
    });
    this.credentials = credentials;
    return credentials;
  }

  tutorialInstances(): Promise<TutorialInstance[]> {
    return this.request("/tutorial", { headers: this.headers() });
  }

  submitTutorial(labels: number[]): Promise<TutorialResult> {
    return this.request("/tutorial/submit", {
      method: "POST",
      headers: this.headers(),
      body: JSON.stringify({ labels }),
    });
  }

  nextInstance(projectId: string, word: string): Promise<NextInstance> {
    return this.request(
      `/projects/${encodeURIComponent(projectId)}/words/${encodeURIComponent(word)}/next`,
      { headers: this.headers() },
    );
  }

  submitJudgment(
    projectId: string,
    word: string,
    instanceId: string,
    label: number,
    comment = "",
  ): Promise<{ stored: boolean }> {
    return this.request("/judgments", {
      method: "POST",
      headers: this.headers(),
      body: JSON.stringify({
        project_id: projectId,
        word,
        instance_id: instanceId,
        label,
        comment,
      }),
    });
  }

  graph(projectId: string, word: string): Promise<GraphDocument> {
    return this.request(
      `/projects/${encodeURIComponent(projectId)}/words/${encodeURIComponent(word)}/graph`,
      { headers: this.headers() },
    );
  }

  dataTable(
    projectId: string,
    word: string,
    kind: "uses" | "judgments",
    sortBy = "",
    descending = false,
  ): Promise<Record<string, unknown>[]> {
    const params = new URLSearchParams({ kind });
    if (sortBy) params.set("sort_by", sortBy);
    if (descending) params.set("descending", "true");
    return this.request(
      `/projects/${encodeURIComponent(projectId)}/words/${encodeURIComponent(word)}/data?${params}`,
      { headers: this.headers() },
    );
  }

  taskStatus(taskId: string): Promise<TaskStatus> {
    return this.request(`/tasks/${encodeURIComponent(taskId)}`, {
      headers: this.headers(),
    });
  }
}
