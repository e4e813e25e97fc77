import type {
  JobPayload,
  ProjectPayload,
  ReportPayload,
  SentencePayload,
  TokenPatchBody,
  TrendRow,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly details: unknown = null,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  const text = await response.text();
  let doc: any = null;
  try {
    doc = text ? JSON.parse(text) : null;
  } catch {
    doc = null;
  }
  if (!response.ok) {
    const err = doc?.error ?? {};
    throw new ApiError(
      response.status,
      err.code ?? "http_error",
      err.message ?? `HTTP ${response.status}`,
      err.details ?? null,
    );
  }
  return doc as T;
}

const json = (body: unknown): RequestInit => ({
  method: "POST",
  headers: { "Content-Type": "application/json" },
  body: JSON.stringify(body),
});

export class Api {
  constructor(
    readonly base = "/api",
    public annotator = "",
  ) {}

  getProject(): Promise<ProjectPayload> {
    return request(`${this.base}/project`);
  }

  getLabels(): Promise<{ labels: string[] }> {
    return request(`${this.base}/labels`);
  }

  getBatchSentences(index: number): Promise<SentencePayload[]> {
    return request(`${this.base}/batches/${index}/sentences`);
  }

  getSentence(sid: string): Promise<SentencePayload> {
    return request(`${this.base}/sentences/${encodeURIComponent(sid)}`);
  }

  patchToken(sid: string, tokenId: number, patch: TokenPatchBody): Promise<SentencePayload> {
    return request(`${this.base}/sentences/${encodeURIComponent(sid)}/tokens/${tokenId}`, {
      method: "PATCH",
      headers: {
        "Content-Type": "application/json",
        "X-Annotator": this.annotator,
      },
      body: JSON.stringify(patch),
    });
  }

  finalize(index: number, idempotencyKey?: string): Promise<ReportPayload> {
    return request(`${this.base}/batches/${index}/finalize`, json({ idempotency_key: idempotencyKey }));
  }

  finetune(index: number, idempotencyKey?: string): Promise<{ job: string | null; model?: string }> {
    return request(`${this.base}/batches/${index}/finetune`, json({ idempotency_key: idempotencyKey }));
  }

  nextBatch(): Promise<{ job: string }> {
    return request(`${this.base}/batches/next`, json({}));
  }

  getJob(id: string): Promise<JobPayload> {
    return request(`${this.base}/jobs/${id}`);
  }

  getTrend(): Promise<{ series: TrendRow[] }> {
    return request(`${this.base}/trend`);
  }

  getReport(index: number): Promise<ReportPayload> {
    return request(`${this.base}/batches/${index}/report`);
  }

  getConfusionCsv(index: number): Promise<string> {
    return fetch(`${this.base}/batches/${index}/confusion.csv`).then(async (r) => {
      if (!r.ok) throw new ApiError(r.status, "http_error", `HTTP ${r.status}`);
      return r.text();
    });
  }

  /** Poll a background job until it settles; rejects if it failed. */
  async awaitJob(id: string, intervalMs = 400, timeoutMs = 10 * 60 * 1000): Promise<JobPayload> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const job = await this.getJob(id);
      if (job.state === "done") return job;
      if (job.state === "failed") {
        const e = job.error;
        throw new ApiError(500, e?.code ?? "job_failed", e?.message ?? "job failed", e?.details);
      }
      if (Date.now() > deadline) throw new ApiError(504, "job_timeout", `job ${id} did not finish`);
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }
}
