"""Quick-look SVG plots. Convenience only; nothing downstream reads them."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def quicklook(experiment, header, columns, out_dir) -> Path:
    x, *ys = columns
    fig, ax = plt.subplots(figsize=(7, 4))
    for name, y in zip(header[1:], ys):
        ax.plot(x, y, label=name, lw=1)
    ax.set_xlabel(header[0])
    ax.set_title(experiment)
    ax.legend(fontsize="small")
    fig.tight_layout()
    path = Path(out_dir) / f"{experiment}.svg"
    # fixed metadata keeps the file byte-stable across runs
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
