import {
  BatchPayload,
  CurvePayload,
  LabelItem,
  RunPayload,
  SCHEMA_VERSION,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string }
) => Promise<{ status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(public readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

/** Thin typed client over the four /api endpoints. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = fetch as unknown as FetchLike
  ) {}

  private async get<T extends { schema_version: number }>(path: string): Promise<T> {
    const res = await this.fetchImpl(`${this.baseUrl}${path}`);
    if (res.status !== 200) {
      throw new ApiError(res.status, `GET ${path} failed`);
    }
    const body = (await res.json()) as T;
    if (body.schema_version !== SCHEMA_VERSION) {
      throw new ApiError(500, `unsupported schema_version ${body.schema_version}`);
    }
    return body;
  }

  getRun(): Promise<RunPayload> {
    return this.get<RunPayload>("/api/run");
  }

  getBatch(): Promise<BatchPayload> {
    return this.get<BatchPayload>("/api/batch");
  }

  getCurve(): Promise<CurvePayload> {
    return this.get<CurvePayload>("/api/curve");
  }

  async postLabels(labels: LabelItem[]): Promise<RunPayload> {
    const res = await this.fetchImpl(`${this.baseUrl}/api/labels`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ labels }),
    });
    if (res.status !== 200) {
      const detail = (await res.json()) as { error?: string };
      throw new ApiError(res.status, detail.error ?? `POST /api/labels failed`);
    }
    return (await res.json()) as RunPayload;
  }
}
