"""Export torchvision's InceptionV3 to ONNX with the outputs vidsum reads.

    python scripts/export_inception_onnx.py inception_v3.onnx            # ImageNet weights
    python scripts/export_inception_onnx.py out.onnx --weights none      # architecture only
    python scripts/export_inception_onnx.py out.onnx --weights ckpt.pth  # local state dict

The graph takes ``images`` (N,3,299,299) in [-1, 1] and exposes ``pool``
(N,2048) and ``conv`` (N,2048,8,8), the Mixed_7c activation. Record the
printed SHA-256 and pass it as --model-sha256 / VIDSUM_MODEL_SHA256.
"""

import argparse

import torch
from torch import nn
from torchvision.models import Inception_V3_Weights, inception_v3

from vidsum.features import sha256_file


class Features(nn.Module):
    def __init__(self, net):
        super().__init__()
        self.net = net

    def forward(self, images):
        n = self.net
        # torchvision's transform_input expects ImageNet-normalised input; we feed [-1, 1]
        x = n.Conv2d_1a_3x3(images)
        x = n.Conv2d_2a_3x3(x)
        x = n.Conv2d_2b_3x3(x)
        x = n.maxpool1(x)
        x = n.Conv2d_3b_1x1(x)
        x = n.Conv2d_4a_3x3(x)
        x = n.maxpool2(x)
        for block in (n.Mixed_5b, n.Mixed_5c, n.Mixed_5d, n.Mixed_6a, n.Mixed_6b, n.Mixed_6c,
                      n.Mixed_6d, n.Mixed_6e, n.Mixed_7a, n.Mixed_7b, n.Mixed_7c):
            x = block(x)
        pool = torch.flatten(n.avgpool(x), 1)
        return pool, x


def load(weights: str):
    if weights == "imagenet":
        net = inception_v3(weights=Inception_V3_Weights.IMAGENET1K_V1)
    else:
        net = inception_v3(weights=None, aux_logits=True, init_weights=True)
        if weights != "none":
            net.load_state_dict(torch.load(weights, map_location="cpu"))
    return net.eval()


def export(path, weights="imagenet", opset=17):
    model = Features(load(weights)).eval()
    dummy = torch.zeros(1, 3, 299, 299)
    torch.onnx.export(model, dummy, str(path), input_names=["images"], output_names=["pool", "conv"],
                      dynamic_axes={"images": {0: "N"}, "pool": {0: "N"}, "conv": {0: "N"}},
                      opset_version=opset, dynamo=False)
    return sha256_file(path)


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("output")
    p.add_argument("--weights", default="imagenet", help="'imagenet', 'none', or a state dict path")
    args = p.parse_args()
    with torch.no_grad():
        digest = export(args.output, args.weights)
    print(f"{args.output}  sha256={digest}")


if __name__ == "__main__":
    main()
