#
#   Figures for scenario and campaign reports, written next to the CSV/JSON output.
#

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import quat  # noqa: E402

RC = {
    "font.family": "serif",
    "font.size": 9.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
    "legend.fontsize": 8,
    "lines.linewidth": 1.0,
    "savefig.dpi": 150,
}

# no timestamps or version strings, so reruns give identical files
_PNG_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_scenario(log, path, title=""):
    """Position, attitude, body rates and rotor commands over time."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(4, 1, figsize=(6.5, 8.0), sharex=True)
        t = log.time
        s = log.states
        for i, lab in enumerate("xyz"):
            line, = ax[0].plot(t, s[:, i], label=lab)
            ax[0].plot(t, log.ref_p[:, i], "--", color=line.get_color(), lw=0.8)
        ax[0].set_ylabel("position [m]")
        ax[0].legend(ncol=3, loc="upper right")

        zb = quat.body_z(s[:, 6:10])
        for i, lab in enumerate("xyz"):
            ax[1].plot(t, zb[:, i], label=f"$z_B$ {lab}")
        ax[1].set_ylabel("thrust direction")
        ax[1].legend(ncol=3, loc="lower right")

        for i, lab in enumerate("xyz"):
            ax[2].plot(t, s[:, 10 + i], label=fr"$\omega_{lab}$")
        ax[2].set_ylabel("body rate [rad/s]")
        ax[2].legend(ncol=3, loc="upper left")

        for i in range(4):
            ax[3].plot(t, log.inputs[:, i], label=f"$u_{i + 1}$")
        ax[3].set_ylabel("command [N]")
        ax[3].set_xlabel("time [s]")
        ax[3].legend(ncol=4, loc="upper right")

        if log.fault_active.any():
            tf = t[np.argmax(log.fault_active)]
            for a in ax:
                a.axvline(tf, color="k", lw=0.6, ls=":")
        if title:
            ax[0].set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_xy(log, path, title=""):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5.0, 4.5))
        ax.plot(log.ref_p[:, 0], log.ref_p[:, 1], "k--", lw=0.8, label="reference")
        ax.plot(log.states[:, 0], log.states[:, 1], label="flown")
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.legend()
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_altitude_profiles(logs, path):
    """Altitude relative to the start for every run of a campaign."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(6.0, 3.5))
        for log in logs:
            ax.plot(log.time, log.states[:, 2] - log.states[0, 2], lw=0.6, alpha=0.6)
        ax.set_xlabel("time [s]")
        ax.set_ylabel("relative altitude [m]")
        fig.tight_layout()
        return _save(fig, path)


def plot_histograms(summary, path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(1, 2, figsize=(7.0, 3.0))
        for a, key, lab in ((ax[0], "xy_histogram", "max xy offset [m]"),
                            (ax[1], "drop_histogram", "max altitude drop [m]")):
            h = summary[key]
            edges = np.asarray(h["edges"])
            a.bar(edges[:-1], h["counts"], width=np.diff(edges), align="edge", edgecolor="k", lw=0.4)
            a.set_xlabel(lab)
            a.set_ylabel("runs")
        fig.tight_layout()
        return _save(fig, path)
