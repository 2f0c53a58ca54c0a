// REST client plus the line-delimited event stream consumer.
//
// Every user action in the UI maps to exactly one of these calls; the UI
// holds no authoritative state of its own.

import type {
  DynamicDoc,
  ExampleBundle,
  HistoryEntryDoc,
  StatusEventDoc,
  TreeDoc,
  TreeSettingsDoc,
} from "./model.js";

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
  ) {
    super(message);
  }
}

export interface CreateTreeBody {
  prompts: {
    main_prompt: string;
    example_prompt?: string | null;
    evaluation_prompt?: string | null;
  };
  settings?: Partial<TreeSettingsDoc>;
  dynamic?: Partial<DynamicDoc>;
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const response = await this.fetchFn(`${this.base}${path}`, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let code = "internal-error";
      let message = `http ${response.status}`;
      try {
        const payload = await response.json();
        code = payload.code ?? code;
        message = payload.message ?? message;
      } catch {
        // non-JSON error body; keep the defaults
      }
      throw new ApiError(code, message, response.status);
    }
    return (await response.json()) as T;
  }

  createTree(body: CreateTreeBody): Promise<TreeDoc> {
    return this.request("POST", "/api/trees", body);
  }

  getTree(treeId: string): Promise<TreeDoc> {
    return this.request("GET", `/api/trees/${treeId}`);
  }

  listTrees(): Promise<HistoryEntryDoc[]> {
    return this.request("GET", "/api/trees");
  }

  expandNode(
    treeId: string,
    nodeId: string,
    seed?: number,
  ): Promise<{ expansion_id: string }> {
    const body = seed === undefined ? {} : { seed };
    return this.request(
      "POST",
      `/api/trees/${treeId}/nodes/${nodeId}/expand`,
      body,
    );
  }

  addThought(
    treeId: string,
    nodeId: string,
    text: string,
    seed?: number,
  ): Promise<{ expansion_id: string }> {
    const body: { text: string; seed?: number } = { text };
    if (seed !== undefined) body.seed = seed;
    return this.request(
      "POST",
      `/api/trees/${treeId}/nodes/${nodeId}/thoughts`,
      body,
    );
  }

  toggleNode(treeId: string, nodeId: string): Promise<TreeDoc> {
    return this.request("POST", `/api/trees/${treeId}/nodes/${nodeId}/toggle`);
  }

  patchDynamic(treeId: string, k: number, b: number): Promise<TreeDoc> {
    return this.request("PATCH", `/api/trees/${treeId}/dynamic`, { k, b });
  }

  getExamples(): Promise<ExampleBundle[]> {
    return this.request("GET", "/api/examples");
  }

  /** Follow one expansion's status events until the stream ends. */
  async *streamEvents(
    treeId: string,
    expansionId: string,
  ): AsyncGenerator<StatusEventDoc> {
    const response = await this.fetchFn(
      `${this.base}/api/trees/${treeId}/events/${expansionId}`,
      { method: "GET" },
    );
    if (!response.ok || response.body === null) {
      throw new ApiError(
        "not-found",
        `no event stream (${response.status})`,
        response.status,
      );
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    const parser = new SseParser();
    while (true) {
      const { done, value } = await reader.read();
      if (done) break;
      for (const event of parser.feed(decoder.decode(value, { stream: true }))) {
        yield event;
      }
    }
    yield* parser.flush();
  }
}

/**
 * Incremental parser for the service's event records: blocks of
 * `id:`/`event:`/`data:` lines separated by a blank line, JSON in `data`.
 */
export class SseParser {
  private buffer = "";

  feed(chunk: string): StatusEventDoc[] {
    this.buffer += chunk;
    const events: StatusEventDoc[] = [];
    let index: number;
    while ((index = this.buffer.indexOf("\n\n")) >= 0) {
      const block = this.buffer.slice(0, index);
      this.buffer = this.buffer.slice(index + 2);
      const event = parseBlock(block);
      if (event) events.push(event);
    }
    return events;
  }

  flush(): StatusEventDoc[] {
    const event = parseBlock(this.buffer);
    this.buffer = "";
    return event ? [event] : [];
  }
}

function parseBlock(block: string): StatusEventDoc | null {
  for (const line of block.split("\n")) {
    if (line.startsWith("data: ")) {
      return JSON.parse(line.slice("data: ".length)) as StatusEventDoc;
    }
  }
  return null;
}
