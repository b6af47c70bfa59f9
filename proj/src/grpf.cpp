#include "hfgpi/grpf.hpp"

#include <cmath>

#include "hfgpi/errors.hpp"

namespace hfgpi::grpf {

CrossAttentionOut cross_attention(ad::Tape& tape, ad::Var x_p, ad::Var x_g, const GrpfVars& p) {
    const Matrix& xp = tape.value(x_p);
    const Matrix& xg = tape.value(x_g);
    const Matrix& wq = tape.value(p.w_q);
    const Matrix& wk = tape.value(p.w_k);
    const Matrix& wv = tape.value(p.w_v);
    if (xp.cols() != wq.rows())
        throw DimensionError("cross_attention: W_Q expects width " + std::to_string(wq.rows()) +
                             ", protein tokens are " + shape_str(xp));
    if (xg.cols() != wk.rows())
        throw DimensionError("cross_attention: W_K expects width " + std::to_string(wk.rows()) +
                             ", gene tokens are " + shape_str(xg));
    if (xg.cols() != wv.rows())
        throw DimensionError("cross_attention: W_V expects width " + std::to_string(wv.rows()) +
                             ", gene tokens are " + shape_str(xg));
    if (wq.cols() != wk.cols())
        throw DimensionError("cross_attention: W_Q and W_K output widths differ");

    double d = static_cast<double>(wq.cols());
    ad::Var q = tape.matmul(x_p, p.w_q);
    ad::Var k = tape.matmul(x_g, p.w_k);
    ad::Var v = tape.matmul(x_g, p.w_v);
    ad::Var logits = tape.scale(tape.matmul(q, tape.transpose(k)), 1.0 / std::sqrt(d));
    CrossAttentionOut out;
    out.attention = tape.row_softmax(logits);
    out.context = tape.matmul(out.attention, v);
    return out;
}

ad::Var structure_loss(ad::Tape& tape, ad::Var attention, const graph::CostMatrix& c_g,
                       const graph::CostMatrix& c_p) {
    const Matrix& t = tape.value(attention);
    std::size_t n_p = t.rows(), n_g = t.cols();
    if (c_g.c.rows() != n_g || c_g.c.cols() != n_g)
        throw DimensionError("structure_loss: C_g is " + shape_str(c_g.c) + ", expected " +
                             std::to_string(n_g) + "x" + std::to_string(n_g));
    if (c_p.c.rows() != n_p || c_p.c.cols() != n_p)
        throw DimensionError("structure_loss: C_p is " + shape_str(c_p.c) + ", expected " +
                             std::to_string(n_p) + "x" + std::to_string(n_p));
    ad::Var cg = tape.constant(c_g.c);
    ad::Var cp = tape.constant(c_p.c);
    ad::Var transported = tape.matmul(tape.matmul(tape.transpose(attention), cp), attention);
    ad::Var diff = tape.sub(cg, transported);
    return tape.scale(tape.sum(tape.hadamard(diff, diff)),
                      1.0 / static_cast<double>(n_g * n_p));
}

ad::Var regulate(ad::Tape& tape, ad::Var x_p, ad::Var context) {
    if (!tape.value(x_p).same_shape(tape.value(context)))
        throw DimensionError("regulate: " + shape_str(tape.value(x_p)) + " + " +
                             shape_str(tape.value(context)));
    return tape.add(x_p, context);
}

} // namespace hfgpi::grpf
