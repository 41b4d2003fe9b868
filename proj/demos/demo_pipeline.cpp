// End-to-end walkthrough: simulate speckle, train a small self-supervised
// model on it, denoise, and round-trip the weights through a checkpoint.
#include <cstdio>

#include "s2s/checkpoint.hpp"
#include "s2s/metrics.hpp"
#include "s2s/net.hpp"
#include "s2s/simulate.hpp"
#include "s2s/train.hpp"

using namespace s2s;

int main() {
    sim::SimConfig sc;
    sc.field_width_mm = 16.0;
    sc.field_depth_mm = 16.0;
    sc.grid_w = 64;
    sc.grid_h = 64;
    sc.n_compound = 1;
    sc.tilt_angles_deg = {0.0};

    train::TrainData data;
    std::vector<img::Image> clean;
    for (int i = 0; i < 4; ++i) {
        img::Image phantom = sim::make_phantom(64, 64, 900 + i);
        sc.seed = 40 + i;
        data.noisy.push_back(sim::simulate_bmode(phantom, sc));
        clean.push_back(phantom);
    }
    std::printf("simulated %zu noisy frames, first-frame SSIM vs phantom %.3f\n",
                data.noisy.size(), metrics::ssim(data.noisy[0], clean[0]));

    nn::ArchConfig arch;
    arch.base_channels = 8;
    arch.enc_conv_blocks = 2;
    arch.enc_res_blocks = 1;
    arch.dec_conv_blocks = 2;
    arch.dec_res_blocks = 1;
    auto model = nn::build_model<float>(arch, 1);

    train::TrainConfig tc;
    tc.epochs = 10;
    tc.batch_size = 2;
    tc.seed = 5;
    auto history = train::train(model, data, tc);
    std::printf("trained %d epochs: loss %.4f -> %.4f\n", tc.epochs,
                history.rows.front().total_loss, history.rows.back().total_loss);

    img::Image out = train::denoise(model, data.noisy[0]);
    std::printf("denoised SSIM vs phantom %.3f (noisy was %.3f)\n",
                metrics::ssim(out, clean[0]), metrics::ssim(data.noisy[0], clean[0]));

    nn::save_checkpoint(model, "demo_model.s2s");
    auto reloaded = nn::load_checkpoint("demo_model.s2s");
    img::Image out2 = train::denoise(reloaded, data.noisy[0]);
    bool identical = out.pixels() == out2.pixels();
    std::printf("checkpoint round trip: %s\n", identical ? "bit-identical output" : "MISMATCH");
    std::remove("demo_model.s2s");
    return identical ? 0 : 1;
}
