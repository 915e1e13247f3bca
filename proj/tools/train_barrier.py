#!/usr/bin/env python3
"""Fits small ReLU barrier networks for the shipped fixtures.

    python3 tools/train_barrier.py darboux fixtures/nets/darboux_2x20.json
    python3 tools/train_barrier.py obstacle fixtures/nets/obstacle_3x16.json

The loss asks for b > 0 on the initial set, b < 0 where h < 0, and
db/dt + b >= 0 (drift only, or with the best bounded input for systems
with inputs). Training is seeded; the written weights are what the tests
use, so re-running is only needed to change a fixture.
"""

import argparse
import json
import math

import torch


def darboux():
    lo, hi = torch.tensor([-2.0, -2.0]), torch.tensor([2.0, 2.0])

    def f(x):
        x1, x2 = x[:, 0], x[:, 1]
        return torch.stack([x2 + 2 * x1 * x2, -x1 + 2 * x1**2 - x2**2], dim=1)

    def h(x):
        return x[:, 0] + x[:, 1] ** 2

    init_lo, init_hi = torch.tensor([0.0, 1.0]), torch.tensor([1.0, 2.0])
    return dict(lo=lo, hi=hi, f=f, g=None, h=h, init=(init_lo, init_hi), width=[20])


def obstacle():
    lo, hi = torch.tensor([-2.0, -2.0, -2.0]), torch.tensor([2.0, 2.0, 2.0])

    def f(x):
        return torch.stack([torch.sin(x[:, 2]), torch.cos(x[:, 2]), torch.zeros_like(x[:, 0])], dim=1)

    def h(x):
        return x[:, 0] ** 2 + x[:, 1] ** 2 - 0.04

    g = torch.tensor([0.0, 0.0, 1.0])
    init_lo = torch.tensor([-0.1, -2.0, -math.pi / 6])
    init_hi = torch.tensor([0.1, -1.8, math.pi / 6])
    return dict(lo=lo, hi=hi, f=f, g=g, h=h, init=(init_lo, init_hi), width=[16])


def uniform(n, lo, hi, gen):
    return lo + (hi - lo) * torch.rand(n, lo.numel(), generator=gen)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("system", choices=["darboux", "obstacle"])
    ap.add_argument("out")
    ap.add_argument("--epochs", type=int, default=6000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--input-bound", type=float, default=2.0)
    ap.add_argument("--band", type=float, default=0.2)
    ap.add_argument("--lie-weight", type=float, default=1.0)
    ap.add_argument("--lie-margin", type=float, default=0.05)
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    gen = torch.Generator().manual_seed(args.seed)
    spec = darboux() if args.system == "darboux" else obstacle()
    n = spec["lo"].numel()

    layers, prev = [], n
    for w in spec["width"]:
        layers += [torch.nn.Linear(prev, w), torch.nn.ReLU()]
        prev = w
    layers.append(torch.nn.Linear(prev, 1))
    net = torch.nn.Sequential(*layers).double()
    opt = torch.optim.Adam(net.parameters(), lr=3e-3)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, args.epochs)

    for epoch in range(args.epochs):
        x = uniform(4096, spec["lo"], spec["hi"], gen).double().requires_grad_(True)
        b = net(x).squeeze(1)
        grad = torch.autograd.grad(b.sum(), x, create_graph=True)[0]
        bdot = (grad * spec["f"](x).double()).sum(1)
        if spec["g"] is not None:
            bdot = bdot + args.input_bound * (grad * spec["g"].double()).sum(1).abs()
        xi = uniform(1024, *spec["init"], gen).double()
        hx = spec["h"](x.detach())
        near = (b.detach().abs() < args.band).double()
        loss = (
            torch.relu(0.1 - net(xi)).mean()
            + 5.0 * torch.relu(b + 0.1)[hx < 0].sum() / max(1, int((hx < 0).sum()))
            + args.lie_weight * (near * torch.relu(args.lie_margin - bdot)).sum() / near.sum().clamp(min=1.0)
        )
        opt.zero_grad()
        loss.backward()
        opt.step()
        sched.step()
        if epoch % 500 == 0:
            print(f"epoch {epoch} loss {loss.item():.5f}")

    linear = [m for m in net if isinstance(m, torch.nn.Linear)]
    doc = {
        "input_dim": n,
        "layers": [
            {"weights": m.weight.detach().T.tolist(), "bias": m.bias.detach().tolist()} for m in linear[:-1]
        ],
        "output": {"weights": linear[-1].weight.detach()[0].tolist(), "bias": linear[-1].bias.item()},
    }
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main()
