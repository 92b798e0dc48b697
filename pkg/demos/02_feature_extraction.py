#!/usr/bin/env python3
"""What the feature layer computes from raw per-modality inputs.

Boxes are normalized to the unit square and embedded; object-category
co-occurrence across a corpus becomes the pair relevance matrix; f0 frames
become embedding rows (average voiced pitch, clamped to 50..500 Hz); VAD
frames become per-clip voice/non-voice durations.
"""

import numpy as np

from mmgi.features import (build_pair_matrix, normalize_bbox, pitch_index,
                           vad_aggregate)
from mmgi.synth import SynthConfig, generate_synthetic

print("-- bounding boxes --")
box = (64, 48, 320, 240)
print(f"pixel box {box} in a 640x480 image ->",
      normalize_bbox(box, 640, 480))

print("\n-- pair relevance --")
# three images: categories co-detected per image
images = [[0, 1], [0, 1], [0], [2, 1]]
pair = build_pair_matrix(images, 3)
print("co-detections", images)
print(np.round(pair.values, 3))

print("\n-- pitch rows --")
for frames in ([219.4, 219.8], [600.0], [0.0, 0.0], [0.0, 140.0, 150.0]):
    print(f"f0 frames {frames} -> embedding row {pitch_index(frames)}")

print("\n-- voice activity on a synthetic example --")
example = generate_synthetic(SynthConfig(sentence_count=1, seed=3))[0]
voice, nonvoice = vad_aggregate(example.speech)
print("tokens:  ", example.tokens)
print("voiced s:", np.round(voice, 2))
print("pauses s:", np.round(nonvoice, 2))
print("(the pause marks the end of a shallow constituent)")
print("gold brackets:", example.gold_brackets)
