"""Plot a CSV written by ``fmcwspoof figdata``. Needs matplotlib (``pip install .[plot]``).

usage: python3 scripts/plot_figdata.py FIG.csv --fig {cfar_range,aoa_heatmap,range_doppler} [-o out.png]
"""

import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def main(argv=None) -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("csv")
    parser.add_argument("--fig", required=True, choices=["cfar_range", "aoa_heatmap", "range_doppler"])
    parser.add_argument("-o", "--out", default=None)
    args = parser.parse_args(argv)
    with open(args.csv, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    if args.fig == "cfar_range":
        cols = {name: body[:, i] for i, name in enumerate(header)}
        ax.plot(cols["range_m"], cols["power_db"], label="power", lw=0.8)
        ax.plot(cols["range_m"], cols["ca_threshold_db"], label="CA threshold")
        ax.plot(cols["range_m"], cols["os_threshold_db"], label="OS threshold")
        ax.set_xlabel("range (m)")
        ax.set_ylabel("dB")
        ax.legend()
    else:
        # first column holds the row coordinate, the header the column coordinates
        y = body[:, 0]
        x = np.array(header[1:], dtype=float)
        mesh = ax.pcolormesh(x, y, body[:, 1:], shading="auto")
        fig.colorbar(mesh, ax=ax)
        ax.set_ylabel(header[0])
    fig.tight_layout()
    fig.savefig(args.out or args.csv.rsplit(".", 1)[0] + ".png", dpi=120)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
