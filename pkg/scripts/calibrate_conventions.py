"""Run the sign-convention calibration and print the table of all eight assignments."""
import sys

from channel_exchange.scan import CalibrationFailed, calibrate


def main():
    try:
        rep = calibrate()
    except CalibrationFailed as exc:
        print(exc.report.to_text())
        return 2
    for row in rep.as_dict()["assignments"]:
        conv = row["conventions"]
        flags = " ".join(f"{k}={v:+d}" for k, v in conv.items())
        print(f"{'pass' if row['passed'] else 'fail'}  {flags}  quad={[round(x, 12) for x in row['quad']]}")
    print("selected:", rep.selected.as_dict())
    return 0


if __name__ == "__main__":
    sys.exit(main())
