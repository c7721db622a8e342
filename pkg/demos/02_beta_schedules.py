"""Beta schedules: how the soft-octave branch weights move during training.

Prints the (beta_low, beta_high) trajectory of every preset over a 20-epoch
run, plus a custom point list and the coupled variant where
beta_low = 1 - beta_high by construction.
"""

from octgan.octave import BetaSchedule

EPOCHS = 20


def show(schedule: BetaSchedule, label: str):
    print(f"\n== {label} ==")
    print("  epoch:   " + " ".join(f"{e:5d}" for e in range(0, EPOCHS, 2)))
    lows, highs = [], []
    for e in range(EPOCHS):
        bl, bh = schedule.at_epoch(e, EPOCHS)
        lows.append(bl)
        highs.append(bh)
    print("  beta_L:  " + " ".join(f"{lows[e]:5.2f}" for e in range(0, EPOCHS, 2)))
    print("  beta_H:  " + " ".join(f"{highs[e]:5.2f}" for e in range(0, EPOCHS, 2)))


def main():
    for name in ("constant", "ramp", "combination"):
        show(BetaSchedule.from_name(name), f"preset '{name}'")

    show(BetaSchedule([(0.0, 1.0, 0.0), (0.25, 1.0, 0.0), (1.0, 0.5, 1.0)],
                      name="custom"),
         "custom points 0:1:0, 0.25:1:0, 1:0.5:1 (hold, then crossfade)")

    show(BetaSchedule.from_name("coupled"),
         "coupled (beta_low + beta_high = 1 at every epoch)")

    print("\nThe 'combination' preset starts low-frequency-dominated "
          "(beta_H = 0.25), meets in the middle, and ends high-frequency-"
          "dominated -- the configuration the stability experiment uses.")


if __name__ == "__main__":
    main()
