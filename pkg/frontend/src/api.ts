/** Typed client for the graphqa query service. All console data comes from
 * these endpoints; the console never synthesizes facts of its own. */

export type Mode = "plain" | "kge" | "text_rag" | "graphrag";

export const MODE_ORDER: Mode[] = ["plain", "kge", "text_rag", "graphrag"];

export interface TripleOut {
    head: string;
    relation: string;
    tail: string;
    score: number;
}

export interface QueryResponse {
    answer: string;
    linked_entities: string[];
    triples: TripleOut[];
    fusion_fallback: boolean;
    mode: string;
    latency_ms: number;
}

export interface NodeOut {
    id: number;
    name: string;
}

export interface EdgeOut {
    source: number;
    target: number;
    relation: string;
}

export interface NeighborhoodResponse {
    entity: string;
    k: number;
    nodes: NodeOut[];
    edges: EdgeOut[];
}

export interface HealthResponse {
    status: string;
    counts: { entities: number; relations: number; triples: number };
}

export class ApiError extends Error {
    constructor(readonly status: number, detail: string) {
        super(detail);
        this.name = "ApiError";
    }
}

async function readError(response: Response): Promise<ApiError> {
    let detail = response.statusText || `HTTP ${response.status}`;
    try {
        const body = await response.json();
        if (body && typeof body.detail === "string") {
            detail = body.detail;
        }
    } catch {
        // keep the status text
    }
    return new ApiError(response.status, detail);
}

export class ApiClient {
    constructor(readonly baseUrl: string = "") {}

    private async get<T>(path: string): Promise<T> {
        const response = await fetch(this.baseUrl + path);
        if (!response.ok) {
            throw await readError(response);
        }
        return (await response.json()) as T;
    }

    async ask(question: string, mode: Mode): Promise<QueryResponse> {
        const response = await fetch(this.baseUrl + "/api/query", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ question, mode }),
        });
        if (!response.ok) {
            throw await readError(response);
        }
        return (await response.json()) as QueryResponse;
    }

    neighborhood(entity: string, k: number): Promise<NeighborhoodResponse> {
        const params = new URLSearchParams({ entity, k: String(k) });
        return this.get(`/api/graph/neighborhood?${params}`);
    }

    modes(): Promise<string[]> {
        return this.get("/api/modes");
    }

    health(): Promise<HealthResponse> {
        return this.get("/api/health");
    }
}
