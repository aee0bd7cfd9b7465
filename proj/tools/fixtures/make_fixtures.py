#!/usr/bin/env python3
# Copyright 2026 The TuneQn Authors
# SPDX-License-Identifier: Apache-2.0
"""Generates the test fixtures under tests/fixtures.

Every model is trained with torch on a synthetic 4-class image task, then
exported twice from the same numpy weights: once as ONNX (via onnx.helper)
and once as a QTM container written by the independent writer below. The
ONNX reference evaluator provides expected logits for each fixture dataset.

Usage: make_fixtures.py <output_dir>
"""

import json
import os
import struct
import sys

import numpy as np
import onnx
import torch
from onnx import TensorProto, helper, numpy_helper
from onnx.reference import ReferenceEvaluator
from onnx.reference.op_run import OpRun

NUM_CLASSES = 4
IMAGE_SHAPE = (3, 8, 8)

DTYPE_NAMES = {np.float32: "F32", np.int8: "I8", np.uint8: "U8", np.int32: "I32", np.int64: "I64"}
DTYPE_CODES = {np.float32: 0, np.int8: 1, np.uint8: 2, np.int32: 3, np.int64: 4}


def synthetic_images(rng, count):
    """Class c lights up quadrant c with a channel tint; noise blurs the boundary."""
    xs = rng.normal(0.0, 1.0, size=(count,) + IMAGE_SHAPE).astype(np.float32)
    ys = rng.integers(0, NUM_CLASSES, size=count)
    for i, c in enumerate(ys):
        r0, c0 = (c // 2) * 4, (c % 2) * 4
        xs[i, :, r0:r0 + 4, c0:c0 + 4] += 0.3
        xs[i, c % 3] += 0.1
    return xs, ys.astype(np.int64)


class TinyCnn(torch.nn.Module):
    def __init__(self):
        super().__init__()
        self.conv = torch.nn.Conv2d(3, 8, 3, padding=1)
        self.fc = torch.nn.Linear(8 * 4 * 4, NUM_CLASSES)

    def forward(self, x):
        x = torch.nn.functional.max_pool2d(torch.relu(self.conv(x)), 2, 2)
        return self.fc(torch.flatten(x, 1))


class SmallCnn(torch.nn.Module):
    def __init__(self):
        super().__init__()
        self.conv1 = torch.nn.Conv2d(3, 16, 3, padding=1)
        self.conv2 = torch.nn.Conv2d(16, 16, 3, padding=1)
        self.bn2 = torch.nn.BatchNorm2d(16)
        self.conv3 = torch.nn.Conv2d(16, 32, 3, padding=1)
        self.conv4 = torch.nn.Conv2d(32, 32, 1)
        self.fc1 = torch.nn.Parameter(torch.randn(32, 64) * 0.15)
        self.fc1_bias = torch.nn.Parameter(torch.zeros(64))
        self.fc2 = torch.nn.Linear(64, NUM_CLASSES)

    def forward(self, x):
        a = torch.relu(self.conv1(x))
        b = torch.relu(self.bn2(self.conv2(a)))
        x = torch.nn.functional.max_pool2d(a + b, 2, 2)
        x = torch.clamp(self.conv3(x), 0.0, 6.0)
        x = torch.nn.functional.avg_pool2d(x, 2, 2)
        x = torch.relu(self.conv4(x))
        x = torch.mean(x, dim=(2, 3)).reshape(-1, 32)
        x = torch.relu(x @ self.fc1 + self.fc1_bias)
        return self.fc2(x)


def train(model, seed, epochs):
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    xs, ys = synthetic_images(rng, 2048)
    xt, yt = torch.from_numpy(xs), torch.from_numpy(ys)
    opt = torch.optim.Adam(model.parameters(), lr=0.01)
    for _ in range(epochs):
        perm = torch.randperm(len(xt))
        for i in range(0, len(xt), 64):
            idx = perm[i:i + 64]
            opt.zero_grad()
            loss = torch.nn.functional.cross_entropy(model(xt[idx]), yt[idx])
            loss.backward()
            opt.step()
    model.eval()
    return model


def np32(t):
    return t.detach().numpy().astype(np.float32).copy()


# Graph description shared by both exporters: nodes carry attrs (typed) and
# weights (ordered input name -> numpy array).
def tiny_cnn_graph(m):
    nodes = [
        dict(id="conv1", op="Conv", inputs=["input", "conv1.W", "conv1.B"], outputs=["conv1_out"],
             attrs={"kernel_shape": ("ints", [3, 3]), "pads": ("ints", [1, 1, 1, 1]), "strides": ("ints", [1, 1])},
             weights={"conv1.W": np32(m.conv.weight), "conv1.B": np32(m.conv.bias)}),
        dict(id="relu1", op="Relu", inputs=["conv1_out"], outputs=["relu1_out"], attrs={}, weights={}),
        dict(id="pool1", op="MaxPool", inputs=["relu1_out"], outputs=["pool1_out"],
             attrs={"kernel_shape": ("ints", [2, 2]), "strides": ("ints", [2, 2])}, weights={}),
        dict(id="flatten", op="Flatten", inputs=["pool1_out"], outputs=["flat"], attrs={"axis": ("i", 1)}, weights={}),
        dict(id="fc", op="Gemm", inputs=["flat", "fc.W", "fc.B"], outputs=["logits"],
             attrs={"transB": ("i", 1), "alpha": ("f", 1.0), "beta": ("f", 1.0)},
             weights={"fc.W": np32(m.fc.weight), "fc.B": np32(m.fc.bias)}),
        dict(id="softmax", op="Softmax", inputs=["logits"], outputs=["probs"], attrs={"axis": ("i", 1)}, weights={}),
    ]
    return dict(name="tiny_cnn", opset=11, input=("input", [-1, 3, 8, 8]), output="probs", nodes=nodes)


def small_cnn_graph(m):
    bn = m.bn2
    conv = lambda name, mod, inp, out, k, pad: dict(
        id=name, op="Conv", inputs=[inp, name + ".W", name + ".B"], outputs=[out],
        attrs={"kernel_shape": ("ints", [k, k]), "pads": ("ints", [pad] * 4), "strides": ("ints", [1, 1]),
               "group": ("i", 1)},
        weights={name + ".W": np32(mod.weight), name + ".B": np32(mod.bias)})
    nodes = [
        conv("conv1", m.conv1, "input", "c1", 3, 1),
        dict(id="relu1", op="Relu", inputs=["c1"], outputs=["r1"], attrs={}, weights={}),
        conv("conv2", m.conv2, "r1", "c2", 3, 1),
        dict(id="bn2", op="BatchNormalization", inputs=["c2", "bn2.scale", "bn2.B", "bn2.mean", "bn2.var"],
             outputs=["b2"], attrs={"epsilon": ("f", float(np.float32(bn.eps)))},
             weights={"bn2.scale": np32(bn.weight), "bn2.B": np32(bn.bias),
                      "bn2.mean": np32(bn.running_mean), "bn2.var": np32(bn.running_var)}),
        dict(id="relu2", op="Relu", inputs=["b2"], outputs=["r2"], attrs={}, weights={}),
        dict(id="residual", op="Add", inputs=["r1", "r2"], outputs=["sum"], attrs={}, weights={}),
        dict(id="pool1", op="MaxPool", inputs=["sum"], outputs=["p1"],
             attrs={"kernel_shape": ("ints", [2, 2]), "strides": ("ints", [2, 2])}, weights={}),
        conv("conv3", m.conv3, "p1", "c3", 3, 1),
        dict(id="clip3", op="Clip", inputs=["c3", "clip3.min", "clip3.max"], outputs=["k3"], attrs={},
             weights={"clip3.min": np.array(0.0, dtype=np.float32), "clip3.max": np.array(6.0, dtype=np.float32)}),
        dict(id="pool2", op="AveragePool", inputs=["k3"], outputs=["p2"],
             attrs={"kernel_shape": ("ints", [2, 2]), "strides": ("ints", [2, 2])}, weights={}),
        conv("conv4", m.conv4, "p2", "c4", 1, 0),
        dict(id="relu4", op="Relu", inputs=["c4"], outputs=["r4"], attrs={}, weights={}),
        dict(id="gap", op="GlobalAveragePool", inputs=["r4"], outputs=["g"], attrs={}, weights={}),
        dict(id="reshape", op="Reshape", inputs=["g", "reshape.shape"], outputs=["flat"], attrs={},
             weights={"reshape.shape": np.array([-1, 32], dtype=np.int64)}),
        dict(id="fc1", op="MatMul", inputs=["flat", "fc1.W"], outputs=["m1"], attrs={},
             weights={"fc1.W": np32(m.fc1)}),
        dict(id="fc1_bias", op="Add", inputs=["m1", "fc1_bias.B"], outputs=["a1"], attrs={},
             weights={"fc1_bias.B": np32(m.fc1_bias)}),
        dict(id="relu5", op="Relu", inputs=["a1"], outputs=["r5"], attrs={}, weights={}),
        dict(id="fc2", op="Gemm", inputs=["r5", "fc2.W", "fc2.B"], outputs=["logits"],
             attrs={"transB": ("i", 1)}, weights={"fc2.W": np32(m.fc2.weight), "fc2.B": np32(m.fc2.bias)}),
        dict(id="softmax", op="Softmax", inputs=["logits"], outputs=["probs"], attrs={"axis": ("i", -1)}, weights={}),
    ]
    return dict(name="small_cnn", opset=13, input=("input", [-1, 3, 8, 8]), output="probs", nodes=nodes)


def to_onnx(desc, path):
    nodes, inits = [], []
    for n in desc["nodes"]:
        attrs = {k: v for k, (_, v) in n["attrs"].items()}
        nodes.append(helper.make_node(n["op"], n["inputs"], n["outputs"], name=n["id"], **attrs))
        for wname, arr in n["weights"].items():
            inits.append(numpy_helper.from_array(arr, name=wname))
    name, shape = desc["input"]
    dims = ["N" if d < 0 else d for d in shape]
    graph = helper.make_graph(
        nodes, desc["name"],
        [helper.make_tensor_value_info(name, TensorProto.FLOAT, dims)],
        [helper.make_tensor_value_info(desc["output"], TensorProto.FLOAT, ["N", NUM_CLASSES])],
        initializer=inits)
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", desc["opset"])],
                              producer_name="tuneqn-fixtures")
    model.ir_version = 7
    onnx.checker.check_model(model)
    onnx.save(model, path)
    return model


def to_qtm(desc, path):
    blob = bytearray()
    nodes = []
    for n in desc["nodes"]:
        attrs = {}
        for k, (kind, v) in n["attrs"].items():
            attrs[k] = {kind: v}
        weights = []
        for wname, arr in n["weights"].items():
            raw = np.ascontiguousarray(arr).astype(arr.dtype.newbyteorder("<")).tobytes()
            weights.append({"input": wname, "dtype": DTYPE_NAMES[arr.dtype.type], "shape": list(arr.shape),
                            "offset": len(blob), "length": len(raw)})
            blob += raw
        nodes.append({"id": n["id"], "op": n["op"], "inputs": n["inputs"], "outputs": n["outputs"],
                      "attrs": attrs, "weights": weights})
    name, shape = desc["input"]
    header = {"name": desc["name"], "opset": desc["opset"],
              "inputs": [{"name": name, "dtype": "F32", "shape": shape}],
              "outputs": [desc["output"]], "logits": desc["output"], "nodes": nodes}
    text = json.dumps(header, separators=(",", ":"), sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(b"QTMODEL1")
        f.write(struct.pack("<Q", len(text)))
        f.write(text)
        f.write(blob)


def write_tensor(path, arr):
    arr = np.ascontiguousarray(arr)
    with open(path, "wb") as f:
        f.write(b"QTTENSOR")
        f.write(struct.pack("<B", DTYPE_CODES[arr.dtype.type]))
        f.write(struct.pack("<I", arr.ndim))
        for d in arr.shape:
            f.write(struct.pack("<Q", d))
        f.write(arr.astype(arr.dtype.newbyteorder("<")).tobytes())


def write_dataset(root, name, xs, ys):
    os.makedirs(os.path.join(root, name), exist_ok=True)
    samples = []
    for i, (x, y) in enumerate(zip(xs, ys)):
        rel = f"sample_{i:04d}.qtt"
        write_tensor(os.path.join(root, name, rel), x)
        samples.append({"tensor": rel, "label": int(y)})
    with open(os.path.join(root, name, "manifest.json"), "w") as f:
        json.dump({"name": name, "samples": samples}, f, indent=1)


class InferenceBatchNorm(OpRun):
    op_domain = ""

    def _run(self, x, scale, bias, mean, var, epsilon=None, momentum=None, training_mode=None):
        shape = (1, -1) + (1,) * (x.ndim - 2)
        eps = 1e-5 if epsilon is None else epsilon
        y = (x - mean.reshape(shape)) / np.sqrt(var.reshape(shape) + eps) * scale.reshape(shape) + bias.reshape(shape)
        return (y.astype(x.dtype),)


InferenceBatchNorm.__name__ = "BatchNormalization"


def read_tensor(path):
    with open(path, "rb") as f:
        data = f.read()
    ndim = struct.unpack("<I", data[9:13])[0]
    shape = struct.unpack("<" + "Q" * ndim, data[13:13 + 8 * ndim])
    return np.frombuffer(data[13 + 8 * ndim:], dtype=np.float32).reshape(shape)


def write_reference_logits(model, xs, path):
    sess = ReferenceEvaluator(model, new_ops=[InferenceBatchNorm])
    (probs,) = sess.run(None, {"input": xs})
    write_tensor(path, probs.astype(np.float32))


def smallest_models(out):
    relu = helper.make_graph([helper.make_node("Relu", ["x"], ["y"], name="relu")], "relu_only",
                             [helper.make_tensor_value_info("x", TensorProto.FLOAT, [1, 4])],
                             [helper.make_tensor_value_info("y", TensorProto.FLOAT, [1, 4])])
    onnx.save(helper.make_model(relu, opset_imports=[helper.make_opsetid("", 13)]), os.path.join(out, "relu.onnx"))

    lstm = helper.make_graph(
        [helper.make_node("LSTM", ["x", "W", "R"], ["y"], name="lstm", hidden_size=2),
         helper.make_node("Relu", ["y"], ["z"], name="relu")], "lstm",
        [helper.make_tensor_value_info("x", TensorProto.FLOAT, [1, 1, 2])],
        [helper.make_tensor_value_info("z", TensorProto.FLOAT, None)],
        initializer=[numpy_helper.from_array(np.zeros((1, 8, 2), np.float32), "W"),
                     numpy_helper.from_array(np.zeros((1, 8, 2), np.float32), "R")])
    onnx.save(helper.make_model(lstm, opset_imports=[helper.make_opsetid("", 13)]), os.path.join(out, "lstm.onnx"))

    f64 = helper.make_graph(
        [helper.make_node("Add", ["x", "c"], ["y"], name="add")], "f64_init",
        [helper.make_tensor_value_info("x", TensorProto.FLOAT, [1, 2])],
        [helper.make_tensor_value_info("y", TensorProto.FLOAT, [1, 2])],
        initializer=[numpy_helper.from_array(np.ones((2,), np.float64), "c")])
    onnx.save(helper.make_model(f64, opset_imports=[helper.make_opsetid("", 13)]), os.path.join(out, "f64_init.onnx"))


def refresh_references(out):
    for tag, name in (("tiny_cnn", "tiny_set"), ("small_cnn", "small_set")):
        with open(os.path.join(out, name, "manifest.json")) as f:
            samples = json.load(f)["samples"]
        xs = np.stack([read_tensor(os.path.join(out, name, s["tensor"])) for s in samples])
        model = onnx.load(os.path.join(out, tag + ".onnx"))
        write_reference_logits(model, xs, os.path.join(out, tag + "_ref_probs.qtt"))


def main():
    args = [a for a in sys.argv[1:] if a != "--refs-only"]
    out = args[0] if args else os.path.join(os.path.dirname(__file__), "..", "..", "tests", "fixtures")
    if "--refs-only" in sys.argv:
        refresh_references(out)
        return
    os.makedirs(out, exist_ok=True)
    torch.set_num_threads(1)

    tiny = train(TinyCnn(), seed=7, epochs=6)
    small = train(SmallCnn(), seed=11, epochs=10)

    rng = np.random.default_rng(2026)
    tiny_x, tiny_y = synthetic_images(rng, 10)
    small_x, small_y = synthetic_images(rng, 200)
    write_dataset(out, "tiny_set", tiny_x, tiny_y)
    write_dataset(out, "small_set", small_x, small_y)

    for desc, xs, tag in ((tiny_cnn_graph(tiny), tiny_x, "tiny_cnn"), (small_cnn_graph(small), small_x, "small_cnn")):
        model = to_onnx(desc, os.path.join(out, tag + ".onnx"))
        to_qtm(desc, os.path.join(out, tag + ".qtm"))
        write_reference_logits(model, xs, os.path.join(out, tag + "_ref_probs.qtt"))
        with torch.no_grad():
            net = tiny if tag == "tiny_cnn" else small
            acc = (net(torch.from_numpy(xs)).argmax(1).numpy() == (tiny_y if tag == "tiny_cnn" else small_y)).mean()
        print(f"{tag}: fixture accuracy {acc:.3f}")

    smallest_models(out)


if __name__ == "__main__":
    main()
