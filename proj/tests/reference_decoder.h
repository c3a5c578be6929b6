#ifndef CCN_REFERENCE_DECODER_H_
#define CCN_REFERENCE_DECODER_H_

#include <span>
#include <vector>

#include "ccn/codec.h"
#include "ccn/entropy.h"
#include "ccn/model.h"
#include "ccn/ordering.h"
#include "ccn/range_coder.h"

namespace ccn::testing {

// Code-by-code decoder: before every single symbol it reruns every network
// over the whole partially decoded block and reads the distribution at that
// one coordinate. Slow, and independent of the group-parallel machinery.
inline CodeBlock3D sequential_decode(std::span<const uint8_t> body, const BlockDims& dims,
                                     const Model& model, uint16_t placeholder,
                                     CodingTrace* trace) {
  CodeBlock3D block(dims, model.levels(), std::vector<uint16_t>(dims.count(), placeholder));
  RangeDecoder decoder(body);
  const bool mog = model.mode == ModelMode::kMog;
  for (const auto& group : build_schedule(dims, model.spec().order).groups) {
    for (const Coordinate& c : group) {
      const FeatureField input = embed_block(block, mog ? &model.centers : nullptr);
      std::vector<double> probs;
      FixedPmf pmf;
      if (!mog) {
        const double v = model.networks[0].forward(input).at(0, c.r, c.p, c.q);
        probs = {v};
        pmf = quantize_bernoulli(v);
      } else {
        const FeatureField w = model.networks[0].forward(input);
        const FeatureField mu = model.networks[1].forward(input);
        const FeatureField var = model.networks[2].forward(input);
        const int comps = model.components();
        std::vector<double> a(comps), b(comps), s(comps);
        for (int i = 0; i < comps; ++i) {
          a[i] = w.at(i, c.r, c.p, c.q);
          b[i] = mu.at(i, c.r, c.p, c.q);
          s[i] = var.at(i, c.r, c.p, c.q);
        }
        probs = mog_pmf(model.centers[c.r], MogView{a, b, s});
        pmf = quantize_pmf(probs);
      }
      const auto symbol = static_cast<uint16_t>(decoder.decode(pmf));
      block.set(c, symbol);
      if (trace) {
        trace->coords.push_back(c);
        trace->probs.push_back(probs);
        trace->symbols.push_back(symbol);
      }
    }
  }
  return block;
}

}  // namespace ccn::testing

#endif  // CCN_REFERENCE_DECODER_H_
