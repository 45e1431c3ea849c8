"""Visualization of evaluation results: sweeps, SROCC distributions and scatter bands."""
from typing import List, Optional

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

from src.evaluation.harness import MonteCarloResults


class Visualizer:
    """Creates plots from harness tables (per-run rows, sweep rows, scatter rows)."""

    def __init__(self, runs: Optional[pd.DataFrame] = None, sweep: Optional[pd.DataFrame] = None,
                 scatter: Optional[pd.DataFrame] = None):
        self.runs = runs
        self.sweep = sweep
        self.scatter = scatter
        # Dark theme with colorblind-friendly colors
        plt.style.use('dark_background')
        self.colors = ['#1b9e77', '#d95f02', '#7570b3', '#c45c93', '#66a61e']
        sns.set_palette(self.colors)

        plt.rcParams.update({
            'axes.facecolor': '#2e2e2e',
            'figure.facecolor': '#1c1c1c',
            'grid.color': '#404040',
            'text.color': '#ffffff',
            'axes.labelcolor': '#ffffff',
            'xtick.color': '#ffffff',
            'ytick.color': '#ffffff',
            'axes.grid': True,
            'grid.alpha': 0.3,
            'axes.titlesize': 14,
            'axes.labelsize': 12,
            'legend.facecolor': '#2e2e2e',
            'legend.edgecolor': '#404040',
            'legend.fontsize': 10,
            'figure.titlesize': 16
        })

    @classmethod
    def from_results(cls, results: MonteCarloResults, **tables) -> 'Visualizer':
        return cls(runs=results.frame(), **tables)

    def _save_or_show(self, save_path: Optional[str] = None) -> None:
        """Helper method to either save or display a figure."""
        if save_path:
            plt.savefig(save_path, dpi=150, bbox_inches='tight', facecolor='#1c1c1c')
            plt.close()
        else:
            plt.show()

    def _require(self, table: Optional[pd.DataFrame], label: str) -> pd.DataFrame:
        if table is None or table.empty:
            raise ValueError(f"No {label} table to plot")
        return table

    def _srocc_long(self) -> pd.DataFrame:
        """Per-run SROCC in long form: one row per (run, model)."""
        runs = self._require(self.runs, "Monte-Carlo run")
        columns: List[str] = [c for c in runs.columns if c.startswith('srocc[')]
        long = runs[['run', *columns]].melt(id_vars=['run'], value_vars=columns, var_name='model', value_name='srocc')
        long['model'] = long['model'].str.slice(len('srocc['), -1)
        ensemble = runs[['run', 'srocc']].assign(model='ensemble')
        return pd.concat([long, ensemble], ignore_index=True).dropna(subset=['srocc'])

    def _draw_sweep(self, ax) -> None:
        sweep = self._require(self.sweep, "ratio sweep")
        for color, metric in zip(self.colors, ('srocc', 'plcc')):
            ax.plot(sweep['train_ratio'], sweep[f'median_{metric}'], marker='o',
                    color=color, label=metric.upper())
        ax.set_xlabel('Training Ratio')
        ax.set_ylabel('Median Correlation')
        ax.set_xticks(sweep['train_ratio'])
        ax.legend(loc='lower right')

    def _draw_scatter(self, ax) -> None:
        scatter = self._require(self.scatter, "scatter").sort_values('objective')
        outside = (scatter['subjective'] < scatter['band_lo']) | (scatter['subjective'] > scatter['band_hi'])
        ax.scatter(scatter.loc[~outside, 'objective'], scatter.loc[~outside, 'subjective'],
                   color=self.colors[0], alpha=0.6, s=14, label='Images')
        ax.scatter(scatter.loc[outside, 'objective'], scatter.loc[outside, 'subjective'],
                   color=self.colors[1], alpha=0.9, s=18, label='Outliers')
        ax.plot(scatter['objective'], scatter['mapped'], color=self.colors[2], label='Fitted curve')
        ax.fill_between(scatter['objective'], scatter['band_lo'], scatter['band_hi'],
                        color=self.colors[2], alpha=0.2, label='2σ band')
        ax.set_xlabel('Objective Score')
        ax.set_ylabel('Subjective Score')
        ax.legend(loc='upper left')

    def plot_ratio_sweep(self, save_path: Optional[str] = None) -> None:
        """Plot median SROCC and PLCC against the training ratio."""
        plt.figure(figsize=(10, 6))
        self._draw_sweep(plt.gca())
        plt.title('Performance vs Training Ratio', pad=20)
        self._save_or_show(save_path)

    def plot_srocc_distribution(self, save_path: Optional[str] = None) -> None:
        """Plot the per-run SROCC distribution of every sub-model and the ensemble."""
        plt.figure(figsize=(12, 6))
        long = self._srocc_long()
        sns.boxplot(data=long, x='model', y='srocc', color=self.colors[0])
        plt.title('SROCC over Monte-Carlo Runs', pad=20)
        plt.xlabel('Model')
        plt.ylabel('SROCC')
        plt.xticks(rotation=30, ha='right')
        self._save_or_show(save_path)

    def plot_scatter_band(self, save_path: Optional[str] = None) -> None:
        """Plot subjective vs objective scores with the fitted curve and its 2σ band."""
        plt.figure(figsize=(10, 6))
        self._draw_scatter(plt.gca())
        plt.title('Subjective vs Objective Scores', pad=20)
        self._save_or_show(save_path)

    def create_summary_dashboard(self, save_path: Optional[str] = None) -> None:
        """Create a dashboard of whichever tables are available."""
        fig, ((ax1, ax2), (ax3, ax4)) = plt.subplots(2, 2, figsize=(15, 12))
        fig.suptitle('Quality Assessment Dashboard', fontsize=16, y=0.95)

        if self.runs is not None and not self.runs.empty:
            long = self._srocc_long()
            sns.boxplot(data=long, x='model', y='srocc', ax=ax1, color=self.colors[0])
            ax1.tick_params(axis='x', rotation=30)
            ax1.set_title('SROCC Distribution', pad=15)

            finite = self.runs['srocc'].dropna()
            sns.histplot(finite, bins=20, ax=ax2, color=self.colors[1], alpha=0.7)
            ax2.axvline(np.median(finite), color=self.colors[2], linestyle='--', label='Median')
            ax2.set_title('Ensemble SROCC Histogram', pad=15)
            ax2.set_xlabel('SROCC')
            ax2.legend()
        else:
            ax1.set_visible(False)
            ax2.set_visible(False)

        if self.sweep is not None and not self.sweep.empty:
            self._draw_sweep(ax3)
            ax3.set_title('Training Ratio Sweep', pad=15)
        else:
            ax3.set_visible(False)

        if self.scatter is not None and not self.scatter.empty:
            self._draw_scatter(ax4)
            ax4.set_title('Scatter and 2σ Band', pad=15)
        else:
            ax4.set_visible(False)

        plt.tight_layout()
        self._save_or_show(save_path)
