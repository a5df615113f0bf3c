"""Reading and writing of sequence, ground truth, workflow and prediction files.

Sequences are line-delimited JSON: a header object followed by one frame
array per line. Every other document is a single JSON object carrying a
format name and version. Files are written atomically.
"""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Union

from .exceptions import FileFormatException, PeriodFlowException
from .metrics import EvalReport, Prediction
from .model import Codebook, FeatureSequence, GroundTruth, Workflow
from .version import FORMAT_VERSION, check_format_version
from .workflow_miner import MiningResult

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

LOGGER = logging.getLogger(__name__)

PathLike = Union[str, Path]

SEQUENCE_SUFFIX = ".seq.jsonl"
GROUND_TRUTH_SUFFIX = ".gt.json"
WORKFLOW_SUFFIX = ".workflow.json"
PREDICTION_SUFFIX = ".pred.json"

SEQUENCE_FORMAT = "periodflow-sequence"
GROUND_TRUTH_FORMAT = "periodflow-ground-truth"
WORKFLOW_FORMAT = "periodflow-workflow"
PREDICTION_FORMAT = "periodflow-prediction"
REPORT_FORMAT = "periodflow-report"


def write_text_atomic(path: PathLike, text: str) -> Path:
    """Write text through a temporary file in the target folder and rename it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(temp_name, path)
    except BaseException:
        if os.path.exists(temp_name):
            os.remove(temp_name)
        raise
    LOGGER.debug(f"Wrote {path}")
    return path


def dumps(document: Dict[str, Any]) -> str:
    return json.dumps(document, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _with_header(kind: str, document: Dict[str, Any]) -> Dict[str, Any]:
    return {"format": kind, "version": FORMAT_VERSION, **document}


def write_document(path: PathLike, kind: str, document: Dict[str, Any]) -> Path:
    return write_text_atomic(path, dumps(_with_header(kind, document)))


def read_document(path: PathLike, kind: str) -> Dict[str, Any]:
    """
    Read a JSON document and check its format name and version.

    :raises FileFormatException: unparsable, wrong format or incompatible version
    """
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FileFormatException(f"{path} is not valid JSON", {"error": str(e)})
    if not isinstance(document, dict):
        raise FileFormatException(f"{path} does not hold a JSON object")
    if document.get("format", kind) != kind:
        raise FileFormatException(
            f"{path} holds a {document.get('format')} document, expected {kind}"
        )
    if "version" in document:
        check_format_version(str(document["version"]), kind)
    return document


def write_sequence(path: PathLike, seq: FeatureSequence) -> Path:
    header = _with_header(
        SEQUENCE_FORMAT,
        {"id": seq.id, "n": seq.n, "T": seq.T, "frame_rate": seq.frame_rate},
    )
    lines = [json.dumps(header, sort_keys=True)]
    lines.extend(json.dumps(frame) for frame in seq.frames.tolist())
    return write_text_atomic(path, "\n".join(lines) + "\n")


def read_sequence(path: PathLike) -> FeatureSequence:
    """
    :raises FileFormatException: bad header, unparsable line or frame count mismatch
    """
    path = Path(path)
    with path.open(encoding="utf-8") as f:
        lines = [line for line in f if line.strip()]
    if not lines:
        raise FileFormatException(f"{path} is empty")
    try:
        header = json.loads(lines[0])
        frames = [json.loads(line) for line in lines[1:]]
    except json.JSONDecodeError as e:
        raise FileFormatException(f"{path} holds an unparsable line", {"error": str(e)})
    if not isinstance(header, dict) or "n" not in header:
        raise FileFormatException(f"{path} lacks a sequence header")
    if header.get("format", SEQUENCE_FORMAT) != SEQUENCE_FORMAT:
        raise FileFormatException(f"{path} is not a sequence file")
    if "version" in header:
        check_format_version(str(header["version"]), SEQUENCE_FORMAT)
    if "T" in header and int(header["T"]) != len(frames):
        raise FileFormatException(
            f"{path} announces {header['T']} frames but holds {len(frames)}"
        )
    if frames and any(len(frame) != int(header["n"]) for frame in frames):
        raise FileFormatException(f"{path} holds frames of the wrong dimension")
    return FeatureSequence(
        frames,
        float(header.get("frame_rate", 1.0)),
        str(header.get("id", _stem(path, SEQUENCE_SUFFIX))),
    )


def write_ground_truth(path: PathLike, gt: GroundTruth) -> Path:
    return write_document(path, GROUND_TRUTH_FORMAT, gt.to_dict())


def read_ground_truth(path: PathLike) -> GroundTruth:
    document = read_document(path, GROUND_TRUTH_FORMAT)
    document.setdefault("id", _stem(Path(path), GROUND_TRUTH_SUFFIX))
    return GroundTruth.from_dict(document)


def write_mining_result(
    path: PathLike, result: MiningResult, seq_id: str, config: Dict[str, Any]
) -> Path:
    document = result.to_dict()
    document["id"] = seq_id
    document["config"] = config
    return write_document(path, WORKFLOW_FORMAT, document)


class WorkflowDocument:
    """The parts of a mining result that the stream tasks need."""

    def __init__(self, seq_id: str, workflow: Workflow, codebook: Codebook) -> None:
        self.id = seq_id
        self.workflow = workflow
        self.codebook = codebook


def read_workflow(path: PathLike) -> WorkflowDocument:
    document = read_document(path, WORKFLOW_FORMAT)
    try:
        return WorkflowDocument(
            str(document.get("id", _stem(Path(path), WORKFLOW_SUFFIX))),
            Workflow.from_dict(document["workflow"]),
            Codebook.from_dict(document["codebook"]),
        )
    except KeyError as e:
        raise FileFormatException(f"{path} is missing field {e}")
    except PeriodFlowException as e:
        raise FileFormatException(f"{path} holds an invalid workflow: {e}")


def write_prediction(path: PathLike, prediction: Prediction) -> Path:
    return write_document(path, PREDICTION_FORMAT, prediction.to_dict())


def read_prediction(path: PathLike) -> Prediction:
    document = read_document(path, PREDICTION_FORMAT)
    document.pop("format", None)
    document.pop("version", None)
    document.setdefault("id", _stem(Path(path), PREDICTION_SUFFIX))
    return Prediction.from_dict(document)


def update_prediction(path: PathLike, seq_id: str, **fields: Any) -> Prediction:
    """Merge fields into the prediction file of a sequence, creating it if needed."""
    path = Path(path)
    data: Dict[str, Any] = {"id": seq_id}
    if path.exists():
        data = read_prediction(path).to_dict()
    for key, value in fields.items():
        if key == "segmentation":
            data.update(value.to_dict())
        else:
            data[key] = value.to_list() if hasattr(value, "to_list") else value
    prediction = Prediction.from_dict(data)
    write_prediction(path, prediction)
    return prediction


def write_report(path: PathLike, report: EvalReport, **extra: Any) -> Path:
    document = report.to_dict()
    document.update(extra)
    return write_document(path, REPORT_FORMAT, document)


def _stem(path: Path, suffix: str) -> str:
    name = path.name
    return name[: -len(suffix)] if name.endswith(suffix) else path.stem


def ids_in(folder: PathLike, suffix: str) -> List[str]:
    folder = Path(folder)
    if not folder.is_dir():
        raise FileFormatException(f"{folder} is not a directory")
    return sorted(_stem(path, suffix) for path in folder.glob(f"*{suffix}"))


def sequence_path(folder: PathLike, seq_id: str) -> Path:
    return Path(folder, f"{seq_id}{SEQUENCE_SUFFIX}")


def ground_truth_path(folder: PathLike, seq_id: str) -> Path:
    return Path(folder, f"{seq_id}{GROUND_TRUTH_SUFFIX}")


def workflow_path(folder: PathLike, seq_id: str) -> Path:
    return Path(folder, f"{seq_id}{WORKFLOW_SUFFIX}")


def prediction_path(folder: PathLike, seq_id: str) -> Path:
    return Path(folder, f"{seq_id}{PREDICTION_SUFFIX}")


def write_suite(folder: PathLike, items: Iterable[Any]) -> List[str]:
    """Write (sequence, ground truth) pairs and return their ids."""
    written = []
    for seq, gt in items:
        seq_id = gt.id or seq.id
        write_sequence(sequence_path(folder, seq_id), seq)
        write_ground_truth(ground_truth_path(folder, seq_id), gt)
        written.append(seq_id)
    return written
