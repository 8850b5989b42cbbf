"""Write the procedural test head (OBJ files + manifest.json) to a directory."""
import argparse

from maskface.assets import write_test_head


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("outdir")
    ap.add_argument("--lat", type=int, default=30)
    ap.add_argument("--lon", type=int, default=40)
    args = ap.parse_args()
    path = write_test_head(args.outdir, args.lat, args.lon)
    print(path)


if __name__ == "__main__":
    main()
