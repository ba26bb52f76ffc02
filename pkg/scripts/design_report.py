"""Closed-form design numbers against the simulated ladder for a few arm ratios.

    python scripts/design_report.py
"""

from memsim.analysis.oscillator import OscillatorDesign, critical_gain, design_report, gain_alpha, osc_frequency

CASES = [(1e4, 1e4, 1e4), (8050, 8050, 8050), (1e3, 2e3, 4e3), (4e3, 2e3, 1e3), (2e3, 5e3, 9e3)]


def main():
    for line in design_report(OscillatorDesign.equal(1e4, 10e-9, k=29)).lines():
        print(line)
    print()
    print(f"{'M1':>7} {'M2':>7} {'M3':>7}  {'alpha':>8}  {'K cubic':>8}  {'K ladder':>8}  {'f (Hz)':>9}")
    for m1, m2, m3 in CASES:
        d = OscillatorDesign(m1, m2, m3, 10e-9)
        print(f"{m1:7.0f} {m2:7.0f} {m3:7.0f}  {gain_alpha(m1, m2, m3):8.3f}  "
              f"{critical_gain(d, 'closed-form'):8.3f}  {critical_gain(d, 'ladder'):8.3f}  {osc_frequency(d):9.2f}")


if __name__ == "__main__":
    main()
