#!/usr/bin/env python3
# Copyright 2026 The tentnet Authors.
# Licensed under the Apache License, Version 2.0.
"""Regenerates the shipped model manifests.

    python3 generate_manifests.py [outdir]

custom_cnn.manifest      the from-scratch classifier at 224x224, six classes
tinynet.manifest         a 4-block backbone used by the test suite
efficientnet_b0.manifest EfficientNetB0 feature extractor (no top)
"""

import json
import math
import sys
from pathlib import Path

CLASSES = ["dried_fruits", "foodstuff", "fruit_and_vegetables",
           "household_goods", "meat", "spices"]
IMAGENET = {"mean": [0.485, 0.456, 0.406], "std": [0.229, 0.224, 0.225]}


class Builder:
    def __init__(self, height, width):
        self.layers = []
        self.params = 0
        self.shape = {}
        self.add("input", "input", {"height": height, "width": width, "channels": 3}, [])
        self.shape["input"] = (height, width, 3)

    def add(self, name, kind, params, inputs):
        self.layers.append({"name": name, "kind": kind, "params": params, "inputs": inputs})
        return name

    def conv(self, name, src, filters, kernel, stride=1, bias=True):
        h, w, c = self.shape[src]
        self.add(name, "conv2d", {"filters": filters, "kernel": kernel, "stride": stride,
                                  "padding": "same", "use_bias": bias}, [src])
        self.params += kernel * kernel * c * filters + (filters if bias else 0)
        self.shape[name] = (math.ceil(h / stride), math.ceil(w / stride), filters)
        return name

    def depthwise(self, name, src, kernel, stride=1):
        h, w, c = self.shape[src]
        self.add(name, "depthwise_conv2d", {"kernel": kernel, "stride": stride,
                                            "padding": "same", "use_bias": False}, [src])
        self.params += kernel * kernel * c
        self.shape[name] = (math.ceil(h / stride), math.ceil(w / stride), c)
        return name

    def bn(self, name, src):
        self.add(name, "batchnorm", {"eps": 1e-3}, [src])
        self.params += 4 * self.shape[src][-1]
        self.shape[name] = self.shape[src]
        return name

    def act(self, name, src, function):
        self.add(name, "activation", {"function": function}, [src])
        self.shape[name] = self.shape[src]
        return name

    def dense(self, name, src, units):
        self.add(name, "dense", {"units": units, "use_bias": True}, [src])
        self.params += self.shape[src][-1] * units + units
        self.shape[name] = (units,)
        return name

    def gap(self, name, src):
        self.add(name, "global_avg_pool", {}, [src])
        self.shape[name] = (self.shape[src][-1],)
        return name

    def binary(self, name, kind, a, b):
        self.add(name, kind, {}, [a, b])
        self.shape[name] = self.shape[a]
        return name

    def manifest(self, class_names, normalization=None):
        doc = {"class_names": class_names, "layers": self.layers}
        if normalization:
            doc["normalization"] = normalization
        return doc


def mbconv(b, prefix, src, filters_in, filters_out, expand, kernel, stride, se_ratio):
    x = src
    filters = filters_in * expand
    if expand != 1:
        x = b.conv(prefix + "expand_conv", x, filters, 1, bias=False)
        x = b.bn(prefix + "expand_bn", x)
        x = b.act(prefix + "expand_activation", x, "swish")
    x = b.depthwise(prefix + "dwconv", x, kernel, stride)
    x = b.bn(prefix + "bn", x)
    x = b.act(prefix + "activation", x, "swish")
    squeezed = max(1, int(filters_in * se_ratio))
    se = b.gap(prefix + "se_squeeze", x)
    se = b.dense(prefix + "se_reduce", se, squeezed)
    se = b.act(prefix + "se_reduce_activation", se, "swish")
    se = b.dense(prefix + "se_expand", se, filters)
    se = b.act(prefix + "se_expand_activation", se, "sigmoid")
    x = b.binary(prefix + "se_excite", "multiply", x, se)
    x = b.conv(prefix + "project_conv", x, filters_out, 1, bias=False)
    x = b.bn(prefix + "project_bn", x)
    if stride == 1 and filters_in == filters_out:
        # Drop-connect is an identity at inference and is omitted.
        x = b.binary(prefix + "add", "add", x, src)
    return x


def efficientnet_b0():
    b = Builder(224, 224)
    x = b.conv("stem_conv", "input", 32, 3, stride=2, bias=False)
    x = b.bn("stem_bn", x)
    x = b.act("stem_activation", x, "swish")
    blocks = [  # expand, kernel, stride, in, out, repeats
        (1, 3, 1, 32, 16, 1), (6, 3, 2, 16, 24, 2), (6, 5, 2, 24, 40, 2),
        (6, 3, 2, 40, 80, 3), (6, 5, 1, 80, 112, 3), (6, 5, 2, 112, 192, 4),
        (6, 3, 1, 192, 320, 1)]
    for i, (expand, kernel, stride, fin, fout, repeats) in enumerate(blocks):
        for j in range(repeats):
            prefix = "block%d%s_" % (i + 1, chr(ord("a") + j))
            x = mbconv(b, prefix, x, fin if j == 0 else fout, fout, expand, kernel,
                       stride if j == 0 else 1, 0.25)
    x = b.conv("top_conv", x, 1280, 1, bias=False)
    x = b.bn("top_bn", x)
    b.act("top_activation", x, "swish")
    # Keras reports 4,049,571 for the no-top model, 7 of which belong to its
    # input normalization layer (mean, variance, count).
    assert b.params == 4049564, b.params
    return b.manifest([], IMAGENET)


def tinynet():
    b = Builder(32, 32)
    x = b.conv("stem_conv", "input", 8, 3, stride=2, bias=False)
    x = b.bn("stem_bn", x)
    x = b.act("stem_activation", x, "swish")
    x = mbconv(b, "block1_", x, 8, 8, 1, 3, 1, 0.25)
    x = mbconv(b, "block2_", x, 8, 16, 4, 3, 2, 0.25)
    x = mbconv(b, "block3_", x, 16, 16, 4, 3, 1, 0.25)
    x = mbconv(b, "block4_", x, 16, 24, 4, 3, 2, 0.25)
    x = b.conv("top_conv", x, 32, 1, bias=False)
    x = b.bn("top_bn", x)
    b.act("top_activation", x, "swish")
    return b.manifest([], {"mean": [0.5, 0.5, 0.5], "std": [0.25, 0.25, 0.25]})


def custom_cnn():
    b = Builder(224, 224)
    x = "input"
    for i, filters in enumerate([32, 64, 128], start=1):
        x = b.conv("conv%d" % i, x, filters, 3)
        x = b.act("relu%d" % i, x, "relu")
        h, w, c = b.shape[x]
        x = b.add("pool%d" % i, "maxpool2d", {"window": 2, "stride": 2}, [x])
        b.shape[x] = (h // 2, w // 2, c)
    h, w, c = b.shape[x]
    x = b.add("flatten", "flatten", {}, [x])
    b.shape[x] = (h * w * c,)
    x = b.dense("dense1", x, 128)
    x = b.act("relu4", x, "relu")
    x = b.add("dropout", "dropout", {"rate": 0.5}, [x])
    b.shape[x] = b.shape["relu4"]
    x = b.dense("logits", x, len(CLASSES))
    b.act("softmax", x, "softmax")
    return b.manifest(CLASSES)


def main():
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
    for name, doc in [("custom_cnn", custom_cnn()), ("tinynet", tinynet()),
                      ("efficientnet_b0", efficientnet_b0())]:
        (outdir / (name + ".manifest")).write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
