#ifndef CCN_EVAL_H_
#define CCN_EVAL_H_

#include <span>
#include <string>
#include <vector>

#include "ccn/codeblock.h"
#include "ccn/model.h"
#include "ccn/ordering.h"

namespace ccn {

struct EvalReport {
  size_t items = 0;
  double estimated_bpp = 0.0;  // model code length per pixel (per code for MoG)
  double actual_bpp = 0.0;     // serialized payload bytes, headers included
  double encode_seconds = 0.0;
  double decode_seconds = 0.0;
  Rational dop;                // of the first item; corpora are usually uniform
  int grid = 1;
  size_t mismatches = 0;       // decoded items differing from the input
};

EvalReport evaluate_lossless(std::span<const GrayImage> corpus, const Model& model,
                             int grid = 1);
EvalReport evaluate_mog(std::span<const CodeBlock3D> corpus, const Model& model);

// Mean group size of the schedule `order` on `dims`, with R x R patches.
Rational degree_of_parallelism(const BlockDims& dims, CodingOrder order, int grid = 1);

std::string report_text(const EvalReport& report);
// One key=value pair per line.
std::string report_key_values(const EvalReport& report);

// Sum over bit-planes of the binary entropy of each plane's frequency of
// ones, pooled across the corpus: bits per pixel of a context-free coder.
double bitplane_entropy(std::span<const GrayImage> corpus);

// All *.pgm files in `dir`, sorted by name.
std::vector<GrayImage> load_pgm_dir(const std::string& dir);

}  // namespace ccn

#endif  // CCN_EVAL_H_
