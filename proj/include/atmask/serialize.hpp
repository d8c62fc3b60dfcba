// serialize.hpp
// On-disk formats for patch masks and toy model weights. Both are a short
// text header terminated by a blank line, followed by a little-endian binary
// payload, so files stay greppable up front and compact behind.

#pragma once

#include <string>

#include "atmask/mask_gen.hpp"
#include "atmask/recon_toy.hpp"

namespace atmask {

/// "ATPMASK1" header with grid dims and m/m_h/m_r counts, then one byte per
/// patch (0 or 1) in axis-0-major order.
void save_patch_mask(const PatchMask& pm, const std::string& path);
PatchMask load_patch_mask(const std::string& path);

/// "ATWEIGHTS1" header with patch_size, embed_dim and masked_input mode,
/// then float32 sections in order: enc_w, enc_b, dec_w, dec_b, mask_token.
void save_model(const ToyMaeModel& model, const std::string& path);
ToyMaeModel load_model(const std::string& path);

}  // namespace atmask
