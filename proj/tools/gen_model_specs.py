#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Writes the YOLOv5s (v6.0) layer graphs under models/ as flat ModelSpec JSON.

Usage: tools/gen_model_specs.py [outdir]
"""
import json
import pathlib
import sys


class Graph:
    def __init__(self, name, input_hw=640):
        self.name = name
        self.input_hw = input_hw
        self.layers = []

    def add(self, kind, name, frm=-1, **fields):
        layer = {"kind": kind, "name": name}
        if frm != -1:
            layer["from"] = frm
        layer.update(fields)
        self.layers.append(layer)
        return len(self.layers) - 1

    def conv(self, name, c2, k=1, s=1, frm=-1, pad=None):
        extra = {"pad": pad} if pad is not None else {}
        return self.add("conv", name, frm, c2=c2, n=k, stride=s, **extra)

    def ghost(self, name, c2, k=1, s=1, frm=-1):
        return self.add("ghost_conv", name, frm, c2=c2, n=k, stride=s, s=2, l=5)

    def c3(self, name, c2, n, shortcut=True, frm=-1, ghost=False):
        c_ = c2 // 2
        src = frm
        a = self.conv(f"{name}.cv1", c_, frm=src)
        b = self.conv(f"{name}.cv2", c_, frm=self._abs(src, a))
        x = a
        for i in range(n):
            if ghost:
                self.ghost(f"{name}.m{i}.ghost1", c_ // 2, frm=x)
                y = self.ghost(f"{name}.m{i}.ghost2", c_)
                x = self.add("add", f"{name}.m{i}.add", [x, y])
            else:
                self.conv(f"{name}.m{i}.cv1", c_, frm=x)
                y = self.conv(f"{name}.m{i}.cv2", c_, k=3)
                x = self.add("add", f"{name}.m{i}.add", [x, y]) if shortcut else y
        cat = self.add("concat", f"{name}.cat", [x, b])
        return self.conv(f"{name}.cv3", c2, frm=cat)

    def _abs(self, frm, first_index):
        # `frm` was relative to the first layer of the block.
        if isinstance(frm, int) and frm < 0:
            return first_index + frm
        return frm

    def sppf(self, name, c2):
        c_ = c2 // 2
        a = self.conv(f"{name}.cv1", c_)
        p1 = self.add("other_fixed", f"{name}.pool1")
        p2 = self.add("other_fixed", f"{name}.pool2")
        p3 = self.add("other_fixed", f"{name}.pool3")
        cat = self.add("concat", f"{name}.cat", [a, p1, p2, p3])
        return self.conv(f"{name}.cv2", c2, frm=cat)

    def se(self, name):
        return self.add("se", name, r=16)

    def spec(self):
        return {"name": self.name, "input_h": self.input_hw, "input_w": self.input_hw,
                "input_c": 3, "layers": self.layers}


def yolov5s(name, se=False, ghost_neck=False, nc=1):
    g = Graph(name)
    conv_neck = g.ghost if ghost_neck else g.conv
    g.conv("0.conv", 32, k=6, s=2, pad=2)
    g.conv("1.conv", 64, k=3, s=2)
    g.c3("2.c3", 64, 1)
    if se:
        g.se("2.se")
    g.conv("3.conv", 128, k=3, s=2)
    g.c3("4.c3", 128, 2)
    if se:
        g.se("4.se")
    p3 = len(g.layers) - 1
    g.conv("5.conv", 256, k=3, s=2)
    g.c3("6.c3", 256, 3)
    if se:
        g.se("6.se")
    p4 = len(g.layers) - 1
    g.conv("7.conv", 512, k=3, s=2)
    g.c3("8.c3", 512, 1, ghost=ghost_neck)
    if se:
        g.se("8.se")
    g.sppf("9.sppf", 512)

    h10 = conv_neck("10.conv", 256)
    g.add("upsample", "11.up", scale=2)
    cat = g.add("concat", "12.cat", [-1, p4])
    g.c3("13.c3", 256, 1, shortcut=False, frm=cat, ghost=ghost_neck)
    h14 = conv_neck("14.conv", 128)
    g.add("upsample", "15.up", scale=2)
    cat = g.add("concat", "16.cat", [-1, p3])
    out17 = g.c3("17.c3", 128, 1, shortcut=False, frm=cat, ghost=ghost_neck)
    conv_neck("18.conv", 128, k=3, s=2)
    cat = g.add("concat", "19.cat", [-1, h14])
    out20 = g.c3("20.c3", 256, 1, shortcut=False, frm=cat, ghost=ghost_neck)
    conv_neck("21.conv", 256, k=3, s=2)
    cat = g.add("concat", "22.cat", [-1, h10])
    out23 = g.c3("23.c3", 512, 1, shortcut=False, frm=cat, ghost=ghost_neck)

    outputs = 3 * (5 + nc)
    for i, src in enumerate((out17, out20, out23)):
        g.add("conv", f"24.detect{i}", src, c2=outputs, bn=False, bias=True)
    return g.spec()


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "models")
    out.mkdir(parents=True, exist_ok=True)
    specs = [
        yolov5s("yolov5s-baseline"),
        yolov5s("yolov5s-se", se=True),
        yolov5s("yolov5s-ghost-neck", ghost_neck=True),
        yolov5s("yolov5s-se-ghost-neck", se=True, ghost_neck=True),
        yolov5s("yolov5s-se-ghost-neck-parts", se=True, ghost_neck=True, nc=2),
    ]
    for spec in specs:
        path = out / f"{spec['name']}.json"
        path.write_text(json.dumps(spec, indent=1) + "\n")
        print(path, len(spec["layers"]), "layers")


if __name__ == "__main__":
    main()
