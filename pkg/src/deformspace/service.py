"""HTTP co-editing API: serves one trained model and one dataset.

The session (model, shapes, per-shape dictionaries, per-handle edit
operators) is built before the listener starts and is read-only afterwards,
so concurrent requests are safe and any request order gives the same
responses. Numeric payloads go through the shared JSON writer, which makes
responses byte-comparable with CLI outputs for identical inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel

from . import datagen, jsonio, nets
from .cli import project_payload, transfer_payload
from .errors import InputError, ShapeError
from .handles import EditRequest, precompute_edit_operators

SHAPE_SUMMARY_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["id", "family", "handles"],
        "properties": {
            "id": {"type": "string"},
            "family": {"type": "string"},
            "handles": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    },
}

PROJECT_RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["z_hat", "points"],
    "properties": {
        "z_hat": {"type": "array", "items": {"type": "number"}},
        "points": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
        },
    },
    "additionalProperties": False,
}


@dataclass
class Session:
    model: object
    family: str
    order: list
    shapes: dict
    dictionaries: dict
    edit_ops: dict  # (shape_id, handle) -> EditOperators


def warm_session(model_path, data_dir) -> Session:
    """Load everything and precompute single-handle edit operators."""
    model = nets.load_checkpoint(model_path)
    shapes, manifest = datagen.load_dataset(data_dir)
    by_id = {s.id: s for s in shapes}
    dictionaries = {}
    edit_ops = {}
    for s in shapes:
        if s.cloud.n != model.n:
            raise ShapeError(f"shape {s.id} has {s.cloud.n} points, model expects {model.n}")
        d = nets.predict_dictionary(model, s.cloud)
        dictionaries[s.id] = d
        s.handle_space.pinv()
        for h in range(s.handle_space.m):
            edit_ops[(s.id, h)] = precompute_edit_operators(s.handle_space, d, (h,))
    return Session(
        model=model,
        family=manifest["family"],
        order=[s.id for s in shapes],
        shapes=by_id,
        dictionaries=dictionaries,
        edit_ops=edit_ops,
    )


class EditIn(BaseModel):
    handle: int
    value: float


class ProjectIn(BaseModel):
    edits: list[EditIn]


class TargetEditIn(BaseModel):
    z_hat: list[float]


class TransferIn(BaseModel):
    src: str
    tgt_edit: TargetEditIn
    dst: str


def _json_response(payload) -> Response:
    return Response(content=jsonio.dumps(payload), media_type="application/json")


def create_app(session: Session | None = None, ui_dir=None) -> FastAPI:
    app = FastAPI(title="deformspace co-editing service")
    app.state.session = session

    def _session() -> Session:
        if app.state.session is None:
            raise HTTPException(status_code=503, detail="session warming up")
        return app.state.session

    def _shape(sid: str):
        ses = _session()
        shape = ses.shapes.get(sid)
        if shape is None:
            raise HTTPException(status_code=404, detail=f"unknown shape {sid!r}")
        return ses, shape

    @app.get("/api/shapes")
    def list_shapes():
        ses = _session()
        return _json_response(
            [
                {
                    "id": sid,
                    "family": ses.family,
                    "handles": ses.shapes[sid].handle_space.m,
                }
                for sid in ses.order
            ]
        )

    @app.get("/api/shapes/{sid}")
    def get_shape(sid: str):
        ses, shape = _shape(sid)
        payload = datagen.shape_to_json_dict(shape)
        payload["defaults"] = shape.handle_space.defaults.tolist()
        payload["lower_bounds"] = list(shape.handle_space.lower_bounds)
        return _json_response(payload)

    @app.get("/api/model")
    def get_model():
        ses = _session()
        return _json_response(
            {"n": ses.model.n, "k": ses.model.k, "variant": ses.model.variant}
        )

    @app.post("/api/shapes/{sid}/project")
    def project(sid: str, body: ProjectIn):
        ses, shape = _shape(sid)
        m = shape.handle_space.m
        for e in body.edits:
            if not 0 <= e.handle < m:
                raise HTTPException(status_code=422, detail=f"handle {e.handle} out of range")
        try:
            edit = EditRequest(
                tuple(e.handle for e in body.edits), tuple(e.value for e in body.edits)
            )
        except InputError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        ops = None
        if len(edit.selected) == 1:
            ops = ses.edit_ops.get((sid, edit.selected[0]))
        payload = project_payload(
            ses.model, shape, edit, dictionary=ses.dictionaries[sid], ops=ops
        )
        return _json_response(payload)

    @app.post("/api/transfer")
    def transfer(body: TransferIn):
        ses = _session()
        for sid in (body.src, body.dst):
            if sid not in ses.shapes:
                raise HTTPException(status_code=404, detail=f"unknown shape {sid!r}")
        src, dst = ses.shapes[body.src], ses.shapes[body.dst]
        try:
            payload = transfer_payload(ses.model, src, body.tgt_edit.z_hat, dst)
        except (InputError, ShapeError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return _json_response(payload)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def build_app(model_path, data_dir, ui_dir=None) -> FastAPI:
    return create_app(warm_session(model_path, data_dir), ui_dir=ui_dir)
