import csv
import json
import logging
from collections.abc import Sequence
from typing import TextIO

from hop_sim.schemas import CheckReport, CoeffTable, McEstimate, PathSample

logger = logging.getLogger(__name__)


def format_float(value: float) -> str:
    """Round-trip decimal form, 17 significant digits."""
    return f"{value:.17g}"


class ResultRepository:
    """Writes simulation results to a text stream as CSV or JSON."""

    def __init__(self, stream: TextIO):
        self.stream = stream

    def write_path(self, path: PathSample) -> None:
        """CSV with header ``t,x1,...,xN``, one row per recorded time."""
        writer = csv.writer(self.stream, lineterminator="\n")
        writer.writerow(["t", *(f"x{j}" for j in range(1, path.model.N + 1))])
        for t, state in zip(path.times, path.states, strict=True):
            writer.writerow([format_float(float(t)), *(format_float(float(v)) for v in state)])
        logger.debug(f"Wrote path with {path.times.size} rows")

    def write_path_json(self, path: PathSample) -> None:
        payload = {
            "model": path.model.to_record(),
            "seed": path.seed,
            "stream": path.stream,
            "dt": path.dt,
            "substeps": path.substeps,
            "meta": path.meta,
            "times": path.times.tolist(),
            "states": path.states.tolist(),
        }
        self._dump(payload)

    def write_ensemble(
        self, times: Sequence[float], labels: Sequence[str], estimates: Sequence[Sequence[McEstimate]]
    ) -> None:
        """CSV ``t,observable,mean_re,mean_im,stderr,n_paths`` ordered by time, then observable."""
        writer = csv.writer(self.stream, lineterminator="\n")
        writer.writerow(["t", "observable", "mean_re", "mean_im", "stderr", "n_paths"])
        for r, t in enumerate(times):
            for label, per_time in zip(labels, estimates, strict=True):
                estimate = per_time[r]
                writer.writerow(
                    [
                        format_float(t),
                        label,
                        format_float(estimate.mean_re),
                        format_float(estimate.mean_im),
                        format_float(estimate.stderr),
                        estimate.n_paths,
                    ]
                )

    def write_ensemble_json(
        self, times: Sequence[float], labels: Sequence[str], estimates: Sequence[Sequence[McEstimate]]
    ) -> None:
        rows = [
            {"t": t, "observable": label} | per_time[r].model_dump()
            for r, t in enumerate(times)
            for label, per_time in zip(labels, estimates, strict=True)
        ]
        self._dump(rows)

    def write_polynomial(self, t: float, y_values: Sequence[float], values: Sequence[complex]) -> None:
        writer = csv.writer(self.stream, lineterminator="\n")
        writer.writerow(["t", "y", "value_re", "value_im"])
        for y, value in zip(y_values, values, strict=True):
            writer.writerow([format_float(t), format_float(y), format_float(value.real), format_float(value.imag)])

    def write_polynomial_json(self, t: float, y_values: Sequence[float], values: Sequence[complex]) -> None:
        self._dump(
            [{"t": t, "y": y, "value_re": v.real, "value_im": v.imag} for y, v in zip(y_values, values, strict=True)]
        )

    def write_coeff_table(self, table: CoeffTable) -> None:
        self.stream.write(table.model_dump_json(indent=2) + "\n")

    def write_report(self, report: CheckReport) -> None:
        self._dump(report.to_json_dict())

    def write_report_csv(self, report: CheckReport) -> None:
        writer = csv.writer(self.stream, lineterminator="\n")
        writer.writerow(["label", "t", "predicted_re", "predicted_im", "mean_re", "mean_im", "stderr", "z"])
        for row in report.rows:
            writer.writerow(
                [
                    row.label,
                    format_float(row.t),
                    format_float(row.predicted_re),
                    format_float(row.predicted_im),
                    format_float(row.mean_re),
                    format_float(row.mean_im),
                    format_float(row.stderr),
                    format_float(row.z),
                ]
            )

    def _dump(self, payload: object) -> None:
        self.stream.write(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")


def format_report_table(report: CheckReport) -> str:
    """Human-readable summary of a check report."""
    header = f"{'observable':<36} {'t':>8} {'predicted':>26} {'estimate':>26} {'stderr':>10} {'z':>7}"
    lines = [f"{report.name}: {report.description}", header, "-" * len(header)]
    for row in report.rows:
        predicted = f"{row.predicted_re:.6g}{row.predicted_im:+.6g}i"
        estimate = f"{row.mean_re:.6g}{row.mean_im:+.6g}i"
        lines.append(f"{row.label:<36} {row.t:>8.4g} {predicted:>26} {estimate:>26} {row.stderr:>10.3g} {row.z:>7.2f}")
    for key, value in report.notes.items():
        lines.append(f"  {key} = {value}")
    lines.append("PASS" if report.passed else "FAIL")
    return "\n".join(lines)
