import argparse
import logging
import sys

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import pandas as pd

from diff_sequences import valid_gap_range


def load_report(csv_path):
    """Read a sweep CSV, skipping its '#' provenance line"""
    return pd.read_csv(csv_path, comment='#')


def plot_report(csv_path, out_path):
    """
    Render MSE against the gap on a log scale, one curve per mode and N,
    with the bound and the start of the valid gap range marked.
    """
    report = load_report(csv_path)
    fig, ax = plt.subplots(figsize=(7, 4.5))

    for (mode, n_rounds), cell in report.groupby(['mode', 'N'], sort=True):
        cell = cell.sort_values('alpha')
        marker = 'o' if mode == 'GE1' else 's' if mode == 'GE2' else 'x'
        ax.semilogy(cell['alpha'], cell['mse'], marker=marker, linestyle='-',
                    label=f"{mode} (N={n_rounds})")

    for n_rounds, cell in report.groupby('N', sort=True):
        cell = cell.drop_duplicates('alpha').sort_values('alpha')
        ax.semilogy(cell['alpha'], cell['crb'], color='black', linestyle='--', label=f"bound (N={n_rounds})")
        ax.axvline(valid_gap_range(int(n_rounds)).start, color='grey', linestyle=':', linewidth=1)

    ax.set_xlabel('gap alpha')
    ax.set_ylabel('MSE of estimated clock skew')
    ax.grid(True, which='both', alpha=0.3)
    ax.legend(fontsize='small')
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    logging.info(f"Saved plot to {out_path}")
    return out_path


def main(argv=None):
    parser = argparse.ArgumentParser(description="Plot a sweep CSV as MSE-vs-gap curves")
    parser.add_argument('report', help="CSV written by the sweep command")
    parser.add_argument('-o', '--output', default='mse.png')
    args = parser.parse_args(argv)
    plot_report(args.report, args.output)
    return 0


if __name__ == '__main__':
    sys.exit(main())
