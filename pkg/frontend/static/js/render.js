/**
 * Canvas point-sprite renderer with a fixed orthographic view. This is
 * display-only math; the point arrays themselves are drawn verbatim.
 */
export class CloudRenderer {
    constructor(canvas) {
        this.canvas = canvas;
        // isometric-ish view angles
        this.yaw = Math.PI / 5;
        this.pitch = Math.PI / 8;
        const ctx = canvas.getContext("2d");
        if (!ctx)
            throw new Error("2d canvas unavailable");
        this.ctx = ctx;
    }
    project(p) {
        const [x, y, z] = p;
        const cy = Math.cos(this.yaw), sy = Math.sin(this.yaw);
        const cp = Math.cos(this.pitch), sp = Math.sin(this.pitch);
        const rx = cy * x + sy * y;
        const ry = -sy * x + cy * y;
        const u = rx;
        const v = cp * z - sp * ry;
        const scale = Math.min(this.canvas.width, this.canvas.height) * 0.8;
        return [
            this.canvas.width / 2 + u * scale,
            this.canvas.height / 2 - v * scale,
        ];
    }
    clear() {
        this.ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    }
    drawPoints(points, color, size = 2) {
        this.ctx.fillStyle = color;
        for (const p of points) {
            const [u, v] = this.project(p);
            this.ctx.fillRect(u - size / 2, v - size / 2, size, size);
        }
    }
    drawBoxes(parts, color = "#999") {
        this.ctx.strokeStyle = color;
        this.ctx.lineWidth = 1;
        for (const part of parts) {
            const corners = [];
            for (const sx of [-1, 1])
                for (const sy of [-1, 1])
                    for (const sz of [-1, 1]) {
                        const p = [0, 1, 2].map((d) => part.center[d] +
                            sx * part.extents[0] * part.axes[0][d] +
                            sy * part.extents[1] * part.axes[1][d] +
                            sz * part.extents[2] * part.axes[2][d]);
                        corners.push(p);
                    }
            const edges = [
                [0, 1], [2, 3], [4, 5], [6, 7],
                [0, 2], [1, 3], [4, 6], [5, 7],
                [0, 4], [1, 5], [2, 6], [3, 7],
            ];
            this.ctx.beginPath();
            for (const [a, b] of edges) {
                const [ua, va] = this.project(corners[a]);
                const [ub, vb] = this.project(corners[b]);
                this.ctx.moveTo(ua, va);
                this.ctx.lineTo(ub, vb);
            }
            this.ctx.stroke();
        }
    }
}
