import math
from typing import List, Optional, Sequence

from ..schemas import BandSummary, DesignInputs, PatchDimensions


def _num(value: Optional[float], digits: int = 3) -> str:
    if value is None:
        return "n/a"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{digits}f}"


def markdown_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Pipe table with columns padded to their widest cell."""
    cells = [list(headers)] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]

    def line(row: List[str]) -> str:
        return "| " + " | ".join(c.ljust(w) for c, w in zip(row, widths)) + " |"

    out = [line(cells[0]), "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    out.extend(line(row) for row in cells[1:])
    return "\n".join(out) + "\n"


def design_table(inputs: DesignInputs, dims: PatchDimensions) -> str:
    rows = [
        ["f_r (GHz)", _num(inputs.f_r / 1e9, 4)],
        ["eps_r", _num(inputs.eps_r, 4)],
        ["h (mm)", _num(inputs.height_h * 1e3, 4)],
        ["W (mm)", _num(dims.width_W * 1e3, 4)],
        ["eps_reff", _num(dims.eps_eff, 4)],
        ["delta_L (mm)", _num(dims.delta_L * 1e3, 4)],
        ["L (mm)", _num(dims.length_L * 1e3, 4)],
    ]
    return markdown_table(["quantity", "value"], rows)


def summary_block(summary: BandSummary, title: str = "Band summary") -> str:
    rows = [[_num(t.frequency_hz / 1e9, 3), _num(t.return_loss_db), _num(t.vswr), _num(t.gain_dbi)]
            for t in summary.targets]
    text = f"## {title}\n\n" + markdown_table(["f (GHz)", "RL (dB)", "VSWR", "gain (dBi)"], rows)
    if summary.resonances:
        res = [[_num(r.f_res / 1e9, 4), _num(r.rl_min_db), _num(r.f_low / 1e9, 4), _num(r.f_high / 1e9, 4)]
               for r in summary.resonances]
        text += "\n" + markdown_table(["f_res (GHz)", "RL min (dB)", "f_low (GHz)", "f_high (GHz)"], res)
    else:
        text += "\nno resonance below -10 dB\n"
    return text


def size_change_pct(base_area: float, area: float) -> Optional[float]:
    """Copper-area reduction in percent; positive means smaller."""
    if base_area <= 0:
        return None
    return (base_area - area) / base_area * 100.0


def comparison_rows(baseline: BandSummary, compared: BandSummary,
                    base_area: float, area: float) -> List[List[str]]:
    """Rows of the unoptimized-vs-optimized table; `compared` carries the change fields."""
    size = size_change_pct(base_area, area)
    rows = [["size (mm^2)", "", _num(base_area * 1e6), _num(area * 1e6), _num(size),
             "regression" if size is not None and size < 0 else ""]]
    for row in compared.targets:
        base = baseline.at(row.frequency_hz)
        f = _num(row.frequency_hz / 1e9, 3)
        for label, key, before, after, change in (
                ("return loss (dB)", "return_loss", base.return_loss_db, row.return_loss_db, row.rl_change_pct),
                ("VSWR", "vswr", base.vswr, row.vswr, row.vswr_change_pct),
                ("gain (dBi)", "gain", base.gain_dbi, row.gain_dbi, row.gain_change_pct)):
            flag = "regression" if key in row.regressions else ""
            rows.append([label, f, _num(before), _num(after), _num(change), flag])
    return rows


def comparison_block(baseline: BandSummary, compared: BandSummary, base_area: float, area: float) -> str:
    headers = ["parameter", "f (GHz)", "unoptimized", "optimized", "change (%)", "note"]
    return "## Unoptimized vs optimized\n\n" + markdown_table(
        headers, comparison_rows(baseline, compared, base_area, area))
