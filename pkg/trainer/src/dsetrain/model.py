"""FoldingNet-style per-point networks matching the inference dataflow.

Encoder MLP per point, max-pool to a 1024-wide patch feature, concat of
that feature onto each point's raw 4D input, then two decoder MLP blocks
down to the per-point output (1 for the classifier, 2 for the projector).
"""

from __future__ import annotations

import torch
import torch.nn as nn

GLOBAL_WIDTH = 1024
ENCODER_WIDTHS = (4, 64, 128, GLOBAL_WIDTH)
DECODER_WIDTHS = (GLOBAL_WIDTH + 4, 512, 256, 128, 64)


class PatchNet(nn.Module):
    def __init__(self, out_width: int):
        super().__init__()
        enc = []
        for a, b in zip(ENCODER_WIDTHS[:-1], ENCODER_WIDTHS[1:]):
            enc += [nn.Linear(a, b), nn.ReLU()]
        self.encoder = nn.Sequential(*enc)
        dec = []
        widths = DECODER_WIDTHS + (out_width,)
        for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
            dec.append(nn.Linear(a, b))
            if b != out_width:
                dec.append(nn.ReLU())
        self.decoder = nn.Sequential(*dec)
        self.out_width = out_width

    def forward(self, rows: torch.Tensor) -> torch.Tensor:
        """rows: (batch, points, 4) normalized features -> (batch, points, out)."""
        per_point = self.encoder(rows)
        pooled = per_point.max(dim=1, keepdim=True).values
        pooled = pooled.expand(-1, rows.shape[1], -1)
        joined = torch.cat([pooled, rows], dim=2)
        return self.decoder(joined)

    def layer_table(self):
        """(kind, in, out) rows mirroring the weight-file layer descriptors."""
        rows = []
        for a, b in zip(ENCODER_WIDTHS[:-1], ENCODER_WIDTHS[1:]):
            rows.append(("linear", a, b))
            rows.append(("relu", b, b))
        rows.append(("global-maxpool", GLOBAL_WIDTH, GLOBAL_WIDTH))
        rows.append(("concat-global", GLOBAL_WIDTH, GLOBAL_WIDTH + 4))
        widths = DECODER_WIDTHS + (self.out_width,)
        for a, b in zip(widths[:-1], widths[1:]):
            rows.append(("linear", a, b))
            if b != self.out_width:
                rows.append(("relu", b, b))
        return rows

    def linear_blocks(self):
        mats, biases = [], []
        for mod in list(self.encoder) + list(self.decoder):
            if isinstance(mod, nn.Linear):
                mats.append(mod.weight.detach().cpu().numpy())
                biases.append(mod.bias.detach().cpu().numpy())
        return mats, biases


def classifier_net() -> PatchNet:
    return PatchNet(out_width=1)


def projector_net() -> PatchNet:
    return PatchNet(out_width=2)
