#include "doctest.h"
#include "gradcheck.hpp"

using namespace advs;
using namespace advs::testing;

TEST_SUITE("gradcheck") {

TEST_CASE("random small graphs agree with central differences") {
    Rng rng(7);
    std::set<std::string> seen;
    for (int i = 0; i < 40; ++i) {
        const GcGraph gc = random_graph(rng);
        CHECK(gc.parameter_count() <= 200);
        const GradCheckResult r = gradcheck(gc);
        CHECK_MESSAGE(r.failures == 0, "graph " << i << " worst relative error " << r.worst_rel);
        seen.insert(r.ops.begin(), r.ops.end());
    }
    for (const char* op : {"conv2d", "dense", "relu", "sigmoid", "maxpool2", "softmax_xent", "mse"})
        CHECK_MESSAGE(seen.count(op) == 1, op << " never exercised");
}

TEST_CASE("strided padded convolution gradient") {
    GcGraph gc;
    Rng rng(3);
    gc.input = Tensor64(Shape{2, 5, 5});
    for (double& v : gc.input.data()) v = rng.uniform01();
    gc.params.push_back(Tensor64(Shape{3, 2, 3, 3}));
    for (double& v : gc.params.back().data()) v = rng.uniform(-0.5, 0.5);
    gc.params.push_back(Tensor64(Shape{3}, 0.1));
    gc.params.push_back(Tensor64(Shape{2, 27}));
    for (double& v : gc.params.back().data()) v = rng.uniform(-0.3, 0.3);
    gc.params.push_back(Tensor64(Shape{2}, 0.0));
    gc.steps = {{Step::conv, 0, 2, 1}, {Step::sigmoid}, {Step::flatten}, {Step::dense, 2}};
    gc.loss = Loss::xent;
    gc.label = 1;
    const GradCheckResult r = gradcheck(gc);
    CHECK(r.failures == 0);
    CHECK(r.checked == 50 + 54 + 3 + 54 + 2);
}

}
