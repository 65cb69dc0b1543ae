import type {
  DecisionAck,
  DecisionRequest,
  Hierarchy,
  QueueResponse,
  Stats,
} from "./types.js";

/** Error carrying the server's {code, message} body and HTTP status. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let code = "http_error";
  let message = `HTTP ${resp.status}`;
  try {
    const body = await resp.json();
    if (body && typeof body.message === "string") {
      code = body.code ?? code;
      message = body.message;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  return new ApiError(resp.status, code, message);
}

/** Thin typed client over the review server's HTTP+JSON endpoints. */
export class ReviewApi {
  constructor(private readonly base: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(this.base + path);
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  fetchQueue(limit = 20, mode?: string): Promise<QueueResponse> {
    const params = new URLSearchParams({ limit: String(limit) });
    if (mode) params.set("mode", mode);
    return this.get<QueueResponse>(`/api/queue?${params}`);
  }

  fetchStats(): Promise<Stats> {
    return this.get<Stats>("/api/stats");
  }

  fetchHierarchy(): Promise<Hierarchy> {
    return this.get<Hierarchy>("/api/hierarchy");
  }

  imageUrl(imageId: string, variant?: "transformed"): string {
    const suffix = variant ? `?variant=${variant}` : "";
    return `${this.base}/api/image/${imageId}${suffix}`;
  }

  async submitDecision(req: DecisionRequest): Promise<DecisionAck> {
    const resp = await fetch(`${this.base}/api/decision`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as DecisionAck;
  }
}
