"""Instance, solution and report files.

Instance files are validated against the ``InstanceDoc`` union; a
"composed" document rebuilds its base instance and replays the recorded
reduction chain, checking every target ε against the recorded one.
"""
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, List, Optional, Type, TypeVar

from pydantic import BaseModel, TypeAdapter, ValidationError

from .errors import InstanceFormatError
from .oracles import (
    SpernerInstance,
    make_cube_sperner,
    make_piecewise_cake,
    make_quasilinear_market,
    make_triangle_sperner,
    make_weighted_argmax_rkkm,
)
from .reductions import SPERNER_KKM_EPSILON, Reduction, build_chain
from .schemas import (
    CakePiecewiseDoc,
    ComposedDoc,
    HousingQuasilinearDoc,
    InstanceDoc,
    KkmWeightedArgmaxDoc,
    Report,
    Solution,
    SpernerCubeDoc,
    SpernerTriangleDoc,
)

logger = logging.getLogger(__name__)

Model = TypeVar("Model", bound=BaseModel)

_instance_adapter = TypeAdapter(InstanceDoc)


@dataclass
class LoadedInstance:
    """The instance to query, the root it was built from and the chain between them"""
    instance: Any
    base: Any
    doc: Any
    reductions: List[Reduction] = field(default_factory=list)
    epsilon: Optional[float] = None

    @property
    def target_epsilon(self) -> Optional[float]:
        return self.reductions[-1].target_epsilon if self.reductions else self.epsilon


def _format_validation_error(error: ValidationError) -> str:
    details = []
    for item in error.errors():
        path = ".".join(str(part) for part in item["loc"]) or "<root>"
        details.append(f"{path}: {item['msg']}")
    return "; ".join(details)


def parse_instance(data: Any):
    try:
        return _instance_adapter.validate_python(data)
    except ValidationError as e:
        raise InstanceFormatError(f"invalid instance document: {_format_validation_error(e)}") from e


def read_json(path: str) -> Any:
    try:
        with open(path, "r") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"{path} is not valid JSON (line {e.lineno}, column {e.colno})") from e


def load_instance(path: str):
    doc = parse_instance(read_json(path))
    logger.info(f"Loaded {doc.kind} instance from {path}")
    return doc


def _build_plain(doc) -> Any:
    if isinstance(doc, HousingQuasilinearDoc):
        return make_quasilinear_market(doc.values)
    if isinstance(doc, KkmWeightedArgmaxDoc):
        return make_weighted_argmax_rkkm(doc.weights)
    if isinstance(doc, CakePiecewiseDoc):
        return make_piecewise_cake([[(s.start, s.end, s.density) for s in player] for player in doc.players])
    if isinstance(doc, SpernerTriangleDoc):
        return make_triangle_sperner(doc.N, doc.colors)
    if isinstance(doc, SpernerCubeDoc):
        return make_cube_sperner(doc.d, doc.N, doc.colors)
    raise InstanceFormatError(f"unsupported instance kind {doc.kind!r}")


def _starting_epsilon(doc: ComposedDoc, inner: LoadedInstance) -> float:
    if doc.epsilon is not None:
        return doc.epsilon
    if isinstance(inner.instance, SpernerInstance) and inner.instance.variant == "triangle":
        return SPERNER_KKM_EPSILON
    if inner.reductions:
        return inner.target_epsilon
    raise InstanceFormatError("composed instance needs a starting epsilon")


def build_instance(doc, memoize: bool = False) -> LoadedInstance:
    if not isinstance(doc, ComposedDoc):
        inst = _build_plain(doc)
        return LoadedInstance(instance=inst, base=inst, doc=doc)

    inner = build_instance(doc.base, memoize=memoize)
    if len(doc.epsilons) != len(doc.chain):
        raise InstanceFormatError(f"chain has {len(doc.chain)} steps but {len(doc.epsilons)} recorded epsilons")
    start = _starting_epsilon(doc, inner)
    reductions = build_chain(inner.instance, doc.chain, start, memoize=memoize)
    for reduction, recorded in zip(reductions, doc.epsilons):
        if not math.isclose(reduction.target_epsilon, recorded, rel_tol=1e-9):
            raise InstanceFormatError(
                f"{reduction.name} yields epsilon {reduction.target_epsilon:.6g}, file records {recorded:.6g}"
            )
    target = reductions[-1].target if reductions else inner.instance
    return LoadedInstance(
        instance=target,
        base=inner.base,
        doc=doc,
        reductions=inner.reductions + reductions,
        epsilon=inner.epsilon if inner.reductions else start,
    )


def instance_to_doc(inst: Any):
    """Serializable document for a generator-built instance"""
    if inst.descriptor is None:
        raise InstanceFormatError(f"{type(inst).__name__} built by a reduction has no file form; save the chain")
    return parse_instance(inst.descriptor)


def compose_doc(base_doc, reductions: List[Reduction], epsilon: float) -> ComposedDoc:
    return ComposedDoc(
        kind="composed",
        base=base_doc,
        chain=[r.name for r in reductions],
        epsilon=epsilon,
        epsilons=[r.target_epsilon for r in reductions],
    )


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def save_model(model: BaseModel, path: str):
    _ensure_parent(path)
    with open(path, "w") as f:
        f.write(model.model_dump_json(indent=2, exclude_none=True))
        f.write("\n")
    logger.info(f"Wrote {type(model).__name__} to {path}")


def load_model(path: str, model: Type[Model]) -> Model:
    data = read_json(path)
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise InstanceFormatError(f"invalid {model.__name__} file: {_format_validation_error(e)}") from e


def save_instance(doc, path: str):
    save_model(doc, path)


def load_solution(path: str) -> Solution:
    return load_model(path, Solution)


def load_report(path: str) -> Report:
    return load_model(path, Report)

