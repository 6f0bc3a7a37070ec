/** Thin typed client. All displayed geometry comes verbatim from these calls. */
export class ApiClient {
    constructor(fetchImpl = (...args) => fetch(...args), base = "") {
        this.fetchImpl = fetchImpl;
        this.base = base;
    }
    async get(path) {
        const resp = await this.fetchImpl(this.base + path);
        if (!resp.ok)
            throw new Error(`GET ${path}: ${resp.status}`);
        return (await resp.json());
    }
    async post(path, body) {
        const resp = await this.fetchImpl(this.base + path, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(body),
        });
        if (!resp.ok)
            throw new Error(`POST ${path}: ${resp.status}`);
        return (await resp.json());
    }
    shapes() {
        return this.get("/api/shapes");
    }
    shape(id) {
        return this.get(`/api/shapes/${encodeURIComponent(id)}`);
    }
    model() {
        return this.get("/api/model");
    }
    project(id, edits) {
        return this.post(`/api/shapes/${encodeURIComponent(id)}/project`, { edits });
    }
    transfer(src, zHat, dst) {
        return this.post("/api/transfer", { src, tgt_edit: { z_hat: zHat }, dst });
    }
}
/**
 * Keeps only the most recent in-flight task: results of superseded requests
 * resolve to null and must not be rendered.
 */
export class LatestOnly {
    constructor() {
        this.seq = 0;
    }
    async run(task) {
        const ticket = ++this.seq;
        const result = await task();
        return ticket === this.seq ? result : null;
    }
    get current() {
        return this.seq;
    }
}
