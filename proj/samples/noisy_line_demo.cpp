// Trains W-dropout and MC dropout on a noisy line and prints the mean
// predicted sigma of each next to the true noise level.
//
//   noisy_line_demo [sigma_true] [epochs]

#include <cstdio>
#include <cstdlib>

#include "wdrop/wdrop.hpp"

int main(int argc, char** argv) {
  const double sigma_true = argc > 1 ? std::atof(argv[1]) : 1.0;
  const std::size_t epochs = argc > 2 ? static_cast<std::size_t>(std::atol(argv[2])) : 200;

  wdrop::SeededRng rng(7);
  const auto data = wdrop::gen_noisy_line(2000, sigma_true, rng);

  for (auto method : {wdrop::Method::wdropout, wdrop::Method::mc}) {
    wdrop::MethodConfig cfg;
    cfg.method = method;
    cfg.hidden = {50, 50};
    cfg.train_samples = 10;
    cfg.epochs = epochs;
    const auto model = wdrop::train(cfg, data, rng.split(1));
    wdrop::SeededRng pred_rng = rng.split(2);
    const auto pred = wdrop::predict(model, data.features, pred_rng);
    const auto rep = wdrop::evaluate(pred, data.targets);
    std::printf("%-9s mean sigma %.3f (true %.3f)  rmse %.3f  ece %.3f  ws %.3f\n", wdrop::to_string(method).c_str(),
                pred.sigma.mean(), sigma_true, rep.rmse, rep.ece, rep.ws);
  }
  return 0;
}
