#!/usr/bin/env python3
"""Convert a BCI Competition III dataset IVa subject (100 Hz MATLAB export)
into an EEGB v1 file.

Inputs per subject (downloaded by the user from the competition site):
  data_set_IVa_<subj>.mat    continuous signal `cnt`, markers `mrk`, info `nfo`
  true_labels_<subj>.mat     `true_y` for all 280 trials (optional)

Without the true-label file only the labelled training trials are exported.

    python3 convert_bci_iva.py data_set_IVa_aa.mat --labels true_labels_aa.mat \
        --out aa.eegb --subject aa
"""

import argparse
import struct
import sys

import numpy as np
from scipy.io import loadmat


def write_string(out, text):
    data = text.encode("utf-8")
    out.write(struct.pack("<I", len(data)))
    out.write(data)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("data", help="data_set_IVa_<subj>.mat")
    ap.add_argument("--labels", help="true_labels_<subj>.mat with true_y")
    ap.add_argument("--out", required=True, help="output .eegb path")
    ap.add_argument("--subject", default="", help="subject id stored in the header")
    ap.add_argument("--pre", type=float, default=1.0, help="seconds kept before the cue (default 1.0)")
    ap.add_argument("--post", type=float, default=4.0, help="seconds kept after the cue (default 4.0)")
    args = ap.parse_args()

    mat = loadmat(args.data, struct_as_record=False, squeeze_me=True)
    cnt = 0.1 * np.asarray(mat["cnt"], dtype=np.float64)  # samples x channels, microvolts
    mrk = mat["mrk"]
    nfo = mat["nfo"]
    fs = float(nfo.fs)
    pos = np.asarray(mrk.pos, dtype=np.int64) - 1  # MATLAB indices are 1-based
    y = np.asarray(mrk.y, dtype=np.float64)
    classes = [str(c) for c in np.atleast_1d(nfo.classes)]

    if args.labels:
        true_y = np.asarray(loadmat(args.labels, squeeze_me=True)["true_y"], dtype=np.float64)
        if true_y.shape != y.shape:
            sys.exit("label file does not match the marker count")
        y = true_y

    pre = int(round(args.pre * fs))
    post = int(round(args.post * fs))
    keep = [i for i in range(len(pos)) if np.isfinite(y[i]) and pos[i] - pre >= 0 and pos[i] + post <= cnt.shape[0]]
    if not keep:
        sys.exit("no labelled trials fit the requested epoch")

    channels = cnt.shape[1]
    samples = pre + post
    with open(args.out, "wb") as out:
        out.write(b"EEGB")
        out.write(struct.pack("<IIII", 1, channels, samples, len(keep)))
        out.write(struct.pack("<ff", fs, args.pre))
        write_string(out, classes[0] if len(classes) > 0 else "class1")
        write_string(out, classes[1] if len(classes) > 1 else "class2")
        write_string(out, args.subject)
        for i in keep:
            epoch = cnt[pos[i] - pre : pos[i] + post, :].T  # channel-major
            out.write(struct.pack("<B", int(y[i])))
            out.write(np.ascontiguousarray(epoch, dtype="<f4").tobytes())
    print(f"wrote {args.out}: {len(keep)} trials, {channels} channels, {samples} samples at {fs:g} Hz")


if __name__ == "__main__":
    main()
