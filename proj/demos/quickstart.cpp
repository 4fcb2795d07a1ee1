// Minimal end-to-end use of the library API: generate a synthetic stream,
// train the predictor and action-value networks jointly, then sweep the
// accuracy-cost curve on held-out data.

#include <iostream>

#include <featq/featq.hpp>

using namespace featq;

int main() {
    Dataset data = synth::two_gaussian(4000, 1.2, 7);
    SplitDatasets splits = split(data, 7);

    PQArchitecture<float> arch;
    arch.input_dim = data.dim();
    arch.n_classes = data.n_classes;
    arch.n_actions = data.costs.n_groups();
    arch.p_hidden = {32, 16};
    arch.q_own = {16, 8};

    TrainerConfig cfg;
    cfg.seed = 7;
    cfg.t_train = 50;
    cfg.t_test = 50;
    cfg.exploration_decay = 0.999;

    Rng init(7);
    Trainer<float> trainer(PQModel<float>(arch, init), data.costs,
                           Normalizer::fit(splits.train), cfg);

    const int episodes = 3000;
    const int n = splits.train.n();
    for (int e = 0; e < episodes; ++e) {
        const std::vector<int> order = epoch_order(n, 99, e / n);
        const int row = order[static_cast<std::size_t>(e % n)];
        trainer.run_episode(splits.train.instance(row),
                            splits.train.labels[row]);
        if ((e + 1) % 500 == 0)
            std::cout << "episode " << (e + 1) << ", exploration "
                      << trainer.exploration().probability() << "\n";
    }

    EvalParams params;
    params.seed = 11;
    params.t_test = 50;
    AccuracyCostCurve curve =
        accuracy_cost_curve(trainer.model(), trainer.normalizer(),
                            trainer.schedule(), splits.test, params);
    const double total = trainer.schedule().total_cost();
    std::cout << "\ncost -> accuracy\n";
    for (const auto& p : curve.points)
        std::cout << "  " << p.cost << " -> " << p.accuracy << "\n";
    std::cout << "auacc: " << auacc(curve, total) << "\n";
    return 0;
}
