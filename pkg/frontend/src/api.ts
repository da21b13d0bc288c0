// Thin typed client for the campaign service. Network failures are retried
// with backoff; HTTP error responses are never retried, so a label POST is
// delivered at most once per attempt chain.

export interface TaskView {
  task_id: string;
  premise: string;
  hypothesis: string;
}

export interface Progress {
  open: number;
  complete: number;
  discarded: number;
}

export type SubmitOutcome = "accepted" | "conflict";

export interface ApiOptions {
  fetchImpl?: typeof fetch;
  /** Delays between retries of network failures, in ms. */
  backoffMs?: number[];
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) =>
  new Promise<void>((resolve) => setTimeout(resolve, ms));

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

export class ApiClient {
  private readonly fetchImpl: typeof fetch;
  private readonly backoffMs: number[];
  private readonly sleep: (ms: number) => Promise<void>;

  constructor(private readonly baseUrl = "", options: ApiOptions = {}) {
    this.fetchImpl = options.fetchImpl ?? fetch.bind(globalThis);
    this.backoffMs = options.backoffMs ?? [250, 500, 1000, 2000, 4000];
    this.sleep = options.sleep ?? defaultSleep;
  }

  private async withRetry(request: () => Promise<Response>): Promise<Response> {
    let attempt = 0;
    for (;;) {
      try {
        return await request();
      } catch (error) {
        // only reachable on network-level failure: the request never
        // produced a response, so retrying cannot double-deliver
        const delay = this.backoffMs[attempt];
        if (delay === undefined) throw error;
        attempt += 1;
        await this.sleep(delay);
      }
    }
  }

  async nextTask(annotator: string): Promise<TaskView | null> {
    const response = await this.withRetry(() =>
      this.fetchImpl(
        `${this.baseUrl}/api/tasks/next?annotator=${encodeURIComponent(annotator)}`,
      ),
    );
    if (response.status === 204) return null;
    if (!response.ok) {
      throw new ApiError(`next-task failed (${response.status})`, response.status);
    }
    return (await response.json()) as TaskView;
  }

  async submitLabel(
    taskId: string,
    annotator: string,
    label: string,
  ): Promise<SubmitOutcome> {
    const response = await this.withRetry(() =>
      this.fetchImpl(
        `${this.baseUrl}/api/tasks/${encodeURIComponent(taskId)}/label`,
        {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify({ annotator, label }),
        },
      ),
    );
    if (response.ok) return "accepted";
    if (response.status === 409) return "conflict";
    throw new ApiError(`label POST failed (${response.status})`, response.status);
  }

  async progress(): Promise<Progress> {
    const response = await this.withRetry(() =>
      this.fetchImpl(`${this.baseUrl}/api/progress`),
    );
    if (!response.ok) {
      throw new ApiError(`progress failed (${response.status})`, response.status);
    }
    return (await response.json()) as Progress;
  }

  async guidelines(): Promise<string> {
    const response = await this.withRetry(() =>
      this.fetchImpl(`${this.baseUrl}/api/guidelines`),
    );
    if (!response.ok) {
      throw new ApiError(`guidelines failed (${response.status})`, response.status);
    }
    return await response.text();
  }
}
