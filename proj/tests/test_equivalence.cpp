#include <catch2/catch.hpp>

#include "corpus.hpp"
#include "oracles.hpp"
#include "ratchetlab/equivalence.hpp"
#include "ratchetlab/info.hpp"
#include "ratchetlab/random.hpp"

using namespace ratchetlab;

TEST_CASE("retrodictive_partition", "[equivalence]") {
    SECTION("golden mean states have distinct pasts") {
        Partition p = retrodictive_partition(corpus::golden_mean());
        REQUIRE(p.block_count() == 2);
        REQUIRE(p.all_singletons());
    }
    SECTION("period-2 states have distinct pasts") {
        REQUIRE(retrodictive_partition(corpus::period2()).all_singletons());
    }
    SECTION("duplicated states share a block") {
        Partition p = retrodictive_partition(corpus::golden_mean_duplicated());
        REQUIRE(p.block_count() == 2);
        REQUIRE(p.block_of[1] == p.block_of[2]);  // B1 ~ B2
        REQUIRE(p.block_of[0] != p.block_of[1]);
    }
}

TEST_CASE("predictive_partition", "[equivalence]") {
    SECTION("epsilon-machine states are predictively distinct") {
        REQUIRE(predictive_partition(corpus::golden_mean()).all_singletons());
        REQUIRE(predictive_partition(corpus::even_process()).all_singletons());
    }
    SECTION("duplicate iid states collapse") {
        Partition p = predictive_partition(corpus::duplicate_state_iid());
        REQUIRE(p.block_count() == 1);
    }
    SECTION("duality with time reversal") {
        std::mt19937_64 rng(17);
        for (int i = 0; i < 8; ++i) {
            Machine m = random_machine(4, 2, rng);
            REQUIRE(same_partition(retrodictive_partition(m),
                                   predictive_partition(time_reverse(m))));
        }
        Machine dup = corpus::golden_mean_duplicated();
        REQUIRE(same_partition(retrodictive_partition(dup),
                               predictive_partition(time_reverse(dup))));
    }
}

TEST_CASE("merge", "[equivalence]") {
    SECTION("singleton partition is the identity up to relabeling") {
        Machine m = corpus::golden_mean();
        Machine merged = merge(m, Partition::singletons(2));
        for (Index x = 0; x < 2; ++x)
            REQUIRE((merged.transitions[x] - m.transitions[x]).cwiseAbs().maxCoeff() <
                    1e-12);
    }
    SECTION("duplicate pair collapses to the iid machine") {
        Machine m = corpus::duplicate_state_iid();
        Partition whole = Partition::from_block_of({0, 0});
        Machine merged = merge(m, whole);
        REQUIRE(merged.state_count() == 1);
        REQUIRE(merged.transitions[0](0, 0) == Approx(0.5).margin(1e-12));
        REQUIRE(merged.transitions[1](0, 0) == Approx(0.5).margin(1e-12));
    }
    SECTION("golden mean collapsed to one state is the pi-weighted average") {
        Machine m = corpus::golden_mean();
        Machine merged = merge(m, Partition::from_block_of({0, 0}));
        // oracle: 2/3*(1/2,1/2) + 1/3*(1,0) = (2/3, 1/3)
        REQUIRE(merged.transitions[0](0, 0) == Approx(2.0 / 3.0).margin(1e-12));
        REQUIRE(merged.transitions[1](0, 0) == Approx(1.0 / 3.0).margin(1e-12));
        REQUIRE(word_probability(merged, {1, 1}) == Approx(1.0 / 9.0).margin(1e-12));
    }
    SECTION("merged stationary distribution is the block aggregate") {
        std::mt19937_64 rng(5);
        Machine m = random_machine(4, 2, rng);
        Partition p = Partition::from_block_of({0, 1, 0, 1});
        RVec pi = stationary_distribution(m);
        RVec merged_pi = stationary_distribution(merge(m, p));
        REQUIRE(merged_pi(0) == Approx(pi(0) + pi(2)).margin(1e-9));
        REQUIRE(merged_pi(1) == Approx(pi(1) + pi(3)).margin(1e-9));
    }
}

TEST_CASE("is_mergeable", "[equivalence]") {
    SECTION("retrodictive partition is mergeable") {
        Machine m = corpus::golden_mean();
        REQUIRE(is_mergeable(m, retrodictive_partition(m), 8));
    }
    SECTION("collapsing golden mean is not") {
        REQUIRE_FALSE(is_mergeable(corpus::golden_mean(),
                                   Partition::from_block_of({0, 0}), 8));
    }
    SECTION("singleton partition always is") {
        REQUIRE(is_mergeable(corpus::even_process(), Partition::singletons(2), 8));
    }
    SECTION("retrodictive merges stay mergeable on random machines") {
        std::mt19937_64 rng(31);
        for (int i = 0; i < 10; ++i) {
            Machine m = random_machine(4, 2, rng);
            REQUIRE(is_mergeable(m, retrodictive_partition(m), 8));
        }
        REQUIRE(is_mergeable(corpus::golden_mean_duplicated(),
                             retrodictive_partition(corpus::golden_mean_duplicated()), 8));
    }
}

TEST_CASE("forward_epsilon_machine", "[equivalence]") {
    SECTION("golden mean is already minimal") {
        Machine em = forward_epsilon_machine(corpus::golden_mean());
        REQUIRE(em.state_count() == 2);
        REQUIRE(is_unifilar(em));
        REQUIRE(same_process(em, corpus::golden_mean(), 8));
    }
    SECTION("duplicate iid collapses to one state") {
        Machine em = forward_epsilon_machine(corpus::duplicate_state_iid());
        REQUIRE(em.state_count() == 1);
    }
    SECTION("reversed golden mean gets a two-state unifilar presentation") {
        Machine rev = time_reverse(corpus::golden_mean());
        REQUIRE_FALSE(is_unifilar(rev));
        Machine em = forward_epsilon_machine(rev);
        REQUIRE(em.state_count() == 2);
        REQUIRE(is_unifilar(em));
        REQUIRE(same_process(em, rev, 8));
    }
    SECTION("outputs are unifilar with predictively distinct states") {
        std::vector<Machine> inputs = {
            corpus::iid_coin(),          corpus::period2(),
            corpus::period3(),           corpus::golden_mean(),
            corpus::even_process(),      corpus::duplicate_state_iid(),
            corpus::golden_mean_duplicated(),
            corpus::golden_mean_split_unifilar(),
            time_reverse(corpus::golden_mean()),
            time_reverse(corpus::even_process())};
        for (const Machine& m : inputs) {
            Machine em = forward_epsilon_machine(m);
            REQUIRE(is_unifilar(em));
            REQUIRE(predictive_partition(em).all_singletons());
            REQUIRE(same_process(em, m, 8));
        }
    }
    SECTION("random machines either build or report the belief cap") {
        // generic dense machines may lack a finite mixed-state presentation
        std::mt19937_64 rng(41);
        for (int i = 0; i < 6; ++i) {
            Machine m = random_machine(3, 2, rng);
            try {
                Machine em = forward_epsilon_machine(m);
                REQUIRE(is_unifilar(em));
                REQUIRE(same_process(em, m, 8));
            } catch (const BeliefCapExceeded&) {
            }
        }
    }
    SECTION("minimality among unifilar presentations") {
        Machine m = corpus::golden_mean_split_unifilar();
        REQUIRE(is_unifilar(m));
        Machine em = forward_epsilon_machine(m);
        REQUIRE(em.state_count() == 2);
        REQUIRE(em.state_count() <= m.state_count());
        REQUIRE(shannon_entropy(stationary_distribution(em)) <=
                shannon_entropy(stationary_distribution(m)) + 1e-12);
        REQUIRE(same_process(em, corpus::golden_mean(), 8));
    }
    SECTION("minimality over random unifilar machines") {
        // unifilar inputs take the exact predictive-merge path, so every draw
        // must build
        std::mt19937_64 rng(47);
        for (int i = 0; i < 12; ++i) {
            Machine m = random_unifilar_machine(4, 2, rng);
            Machine em = forward_epsilon_machine(m);
            REQUIRE(em.state_count() <= m.state_count());
            REQUIRE(shannon_entropy(stationary_distribution(em)) <=
                    shannon_entropy(stationary_distribution(m)) + 1e-9);
            REQUIRE(same_process(em, m, 8));
        }
    }
}

TEST_CASE("reverse_epsilon_machine", "[equivalence]") {
    SECTION("period-2 is its own reverse epsilon-machine up to relabeling") {
        Machine rem = reverse_epsilon_machine(corpus::period2());
        REQUIRE(rem.state_count() == 2);
        REQUIRE(is_counifilar(rem));
        REQUIRE(same_process(rem, corpus::period2(), 8));
    }
    SECTION("iid coin maps to itself") {
        Machine rem = reverse_epsilon_machine(corpus::iid_coin());
        REQUIRE(rem.state_count() == 1);
    }
    SECTION("golden mean gets a co-unifilar funnel") {
        Machine rem = reverse_epsilon_machine(corpus::golden_mean());
        REQUIRE(rem.state_count() == 2);
        REQUIRE(is_counifilar(rem));
        REQUIRE_FALSE(is_unifilar(rem));
        REQUIRE(same_process(rem, corpus::golden_mean(), 8));
        REQUIRE(retrodictive_partition(rem).all_singletons());
    }
}

TEST_CASE("forward_state_channel", "[equivalence]") {
    SECTION("period-2 pair synchronizes deterministically") {
        Machine fwd = corpus::period2();
        Machine rev = reverse_epsilon_machine(corpus::period2());
        StateChannel ch = forward_state_channel(fwd, rev, 6);
        REQUIRE(ch.max_disagreement < 1e-12);
        REQUIRE(ch.unsynchronized_mass < 1e-12);
        for (Index p = 0; p < 2; ++p) {
            REQUIRE(ch.table.col(p).sum() == Approx(1.0).margin(1e-10));
            REQUIRE(ch.table.col(p).maxCoeff() == Approx(1.0).margin(1e-10));
        }
    }
    SECTION("iid pair is the trivial channel") {
        StateChannel ch =
            forward_state_channel(corpus::iid_coin(), corpus::iid_coin(), 4);
        REQUIRE(ch.table.rows() == 1);
        REQUIRE(ch.table.cols() == 1);
        REQUIRE(ch.table(0, 0) == Approx(1.0).margin(1e-12));
    }
    SECTION("golden mean pair at horizon 12") {
        Machine fwd = corpus::golden_mean();
        Machine rev = reverse_epsilon_machine(fwd);
        StateChannel ch = forward_state_channel(fwd, rev, 12);
        REQUIRE(ch.max_disagreement < 1e-6);
        // column for A (reached after '0'): even mixture; column for B: point mass
        Index a = fwd.state_index("A"), b = fwd.state_index("B");
        REQUIRE(ch.table.col(a).minCoeff() == Approx(0.5).margin(1e-9));
        REQUIRE(ch.table.col(b).maxCoeff() == Approx(1.0).margin(1e-9));
        REQUIRE(ch.table.col(b).minCoeff() == Approx(0.0).margin(1e-9));
    }
    SECTION("mismatched processes are rejected") {
        REQUIRE_THROWS_AS(
            forward_state_channel(corpus::golden_mean(), corpus::period2(), 6),
            PreconditionError);
    }
}

TEST_CASE("ergodic_partition", "[equivalence]") {
    SECTION("deterministic injective channel gives singletons") {
        StateChannel ch;
        ch.table = RMat::Identity(2, 2);
        Partition p = ergodic_partition(ch, RVec::Constant(2, 0.5), RVec::Constant(2, 0.5));
        REQUIRE(p.all_singletons());
    }
    SECTION("constant channel gives one block") {
        StateChannel ch;
        ch.table = RMat::Constant(2, 2, 0.5);
        Partition p = ergodic_partition(ch, RVec::Constant(2, 0.5), RVec::Constant(2, 0.5));
        REQUIRE(p.block_count() == 1);
    }
    SECTION("golden mean pair couples the reverse states") {
        Machine fwd = corpus::golden_mean();
        Machine rev = reverse_epsilon_machine(fwd);
        StateChannel ch = forward_state_channel(fwd, rev, 12);
        Partition p = ergodic_partition(ch, stationary_distribution(fwd),
                                        stationary_distribution(rev));
        REQUIRE(p.block_count() == 1);
    }
    SECTION("period-2 pair stays fully resolved") {
        Machine fwd = corpus::period2();
        Machine rev = reverse_epsilon_machine(fwd);
        StateChannel ch = forward_state_channel(fwd, rev, 6);
        Partition p = ergodic_partition(ch, stationary_distribution(fwd),
                                        stationary_distribution(rev));
        REQUIRE(p.all_singletons());
    }
}
