import type {
  ModelInfo,
  ProjectResponse,
  ShapeDetail,
  ShapeSummary,
  TransferResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client. All displayed geometry comes verbatim from these calls. */
export class ApiClient {
  constructor(
    private fetchImpl: FetchLike = (...args) => fetch(...args),
    private base = "",
  ) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchImpl(this.base + path);
    if (!resp.ok) throw new Error(`GET ${path}: ${resp.status}`);
    return (await resp.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw new Error(`POST ${path}: ${resp.status}`);
    return (await resp.json()) as T;
  }

  shapes(): Promise<ShapeSummary[]> {
    return this.get("/api/shapes");
  }

  shape(id: string): Promise<ShapeDetail> {
    return this.get(`/api/shapes/${encodeURIComponent(id)}`);
  }

  model(): Promise<ModelInfo> {
    return this.get("/api/model");
  }

  project(id: string, edits: { handle: number; value: number }[]): Promise<ProjectResponse> {
    return this.post(`/api/shapes/${encodeURIComponent(id)}/project`, { edits });
  }

  transfer(src: string, zHat: number[], dst: string): Promise<TransferResponse> {
    return this.post("/api/transfer", { src, tgt_edit: { z_hat: zHat }, dst });
  }
}

/**
 * Keeps only the most recent in-flight task: results of superseded requests
 * resolve to null and must not be rendered.
 */
export class LatestOnly {
  private seq = 0;

  async run<T>(task: () => Promise<T>): Promise<T | null> {
    const ticket = ++this.seq;
    const result = await task();
    return ticket === this.seq ? result : null;
  }

  get current(): number {
    return this.seq;
  }
}
