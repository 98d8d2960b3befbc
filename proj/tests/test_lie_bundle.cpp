#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "finhol/lie_bundle.hpp"

using namespace finhol;

namespace {

using Grid3 = std::vector<std::vector<std::vector<std::string>>>;

int eps3(int a, int b, int c) {
  if (a == b || b == c || a == c) return 0;
  return (a + 1) % 3 == b ? 1 : -1;
}

// C^c_ab = eps(a,b,c) on the first three axes, zero elsewhere
Grid3 rotation_structure(int n = 3) {
  Grid3 C(static_cast<std::size_t>(n),
          std::vector<std::vector<std::string>>(static_cast<std::size_t>(n),
                                                std::vector<std::string>(static_cast<std::size_t>(n), "0")));
  for (int c = 0; c < 3 && c < n; ++c)
    for (int a = 0; a < 3 && a < n; ++a)
      for (int b = 0; b < 3 && b < n; ++b)
        C[static_cast<std::size_t>(c)][static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
            std::to_string(eps3(a, b, c));
  return C;
}

// matrix of w -> v x w, the adjoint action of v on the rotation algebra
std::vector<std::vector<std::string>> hat(const std::string& v1, const std::string& v2,
                                          const std::string& v3) {
  return {{"0", "-(" + v3 + ")", v2},
          {v3, "0", "-(" + v1 + ")"},
          {"-(" + v2 + ")", v1, "0"}};
}

std::vector<std::vector<std::string>> zeros(int n) {
  return std::vector<std::vector<std::string>>(static_cast<std::size_t>(n),
                                               std::vector<std::string>(static_cast<std::size_t>(n), "0"));
}

Box square_chart(double half) { return Box{{-half, -half}, {half, half}}; }

// rotation algebra with an adjoint-valued, base-dependent connection: a model
// whose covariant derivative is a derivation of the bracket in every direction
const LieBundleModel& so3_ad_model() {
  static LieBundleModel model(square_chart(1.0), 3, rotation_structure(),
                              {hat("0.3*x2", "0.5", "sin(x1)"), hat("x1", "0.2*x1*x2", "0.4")});
  return model;
}

Eigen::MatrixXd expm(Eigen::MatrixXd A) {
  const int squarings = 10;
  A /= 1024.0;
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  Eigen::MatrixXd sum = term;
  for (int k = 1; k <= 20; ++k) {
    term = term * A / k;
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

Eigen::MatrixXd connection_along(const LieBundleModel& model, const Curve& c, double t) {
  Vec<double> p = c.point(t);
  Vec<double> v = c.velocity(t);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(model.fiber_dim(), model.fiber_dim());
  for (int i = 0; i < model.base_dim(); ++i)
    K += v[static_cast<std::size_t>(i)] * model.connection_at(p, i);
  return K;
}

// derivative defect of the transported frame at time t, with dL/dt taken by a
// fourth-order central difference of four independent integrations
double frame_derivative_defect(const LieBundleModel& model, const Curve& c, double t) {
  const double h = 0.0025;
  OdeOptions tight;
  tight.abs_tol = 1e-12;
  tight.rel_tol = 1e-12;
  Eigen::MatrixXd m2 = lambda_at(model, c, t - 2 * h, tight);
  Eigen::MatrixXd m1 = lambda_at(model, c, t - h, tight);
  Eigen::MatrixXd p1 = lambda_at(model, c, t + h, tight);
  Eigen::MatrixXd p2 = lambda_at(model, c, t + 2 * h, tight);
  Eigen::MatrixXd ldot = (m2 - 8 * m1 + 8 * p1 - p2) / (12 * h);
  Eigen::MatrixXd defect = ldot + connection_along(model, c, t) * lambda_at(model, c, t, tight);
  return defect.cwiseAbs().maxCoeff();
}

int svd_rank(const Eigen::MatrixXd& A) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  double cut = std::max(1e-8 * (sv.size() ? sv(0) : 0.0), 1e-9);
  int rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > cut) rank = static_cast<int>(k) + 1;
  return rank;
}

}  // namespace

TEST_CASE("model construction validates shapes, variables, and bracket axioms") {
  // antisymmetry violation
  Grid3 bad(2, std::vector<std::vector<std::string>>(2, std::vector<std::string>(2, "0")));
  bad[0][0][1] = "1";
  bad[0][1][0] = "1";
  CHECK_THROWS_AS(LieBundleModel(square_chart(1.0), 2, bad, {zeros(2), zeros(2)}), ConfigError);

  // antisymmetric but Jacobi-violating table
  Grid3 nojac(3, std::vector<std::vector<std::string>>(3, std::vector<std::string>(3, "0")));
  nojac[0][0][1] = "1";
  nojac[0][1][0] = "-1";
  nojac[1][1][2] = "1";
  nojac[1][2][1] = "-1";
  CHECK_THROWS_AS(LieBundleModel(square_chart(1.0), 3, nojac, {zeros(3), zeros(3)}),
                  ConfigError);

  // fiber variables are off limits in coefficient expressions
  Grid3 ufield(1, std::vector<std::vector<std::string>>(1, std::vector<std::string>(1, "0")));
  CHECK_THROWS_AS(LieBundleModel(square_chart(1.0), 1, ufield,
                                 {{{"u1"}}, {{"0"}}}),
                  ConfigError);
  CHECK_THROWS_AS(LieBundleModel(square_chart(1.0), 1, ufield, {{{"t"}}, {{"0"}}}), ParseError);

  // shape mismatches
  CHECK_THROWS_AS(LieBundleModel(square_chart(1.0), 3, rotation_structure(), {zeros(3)}),
                  ConfigError);
  CHECK_THROWS_AS(LieBundleModel(square_chart(1.0), 4, rotation_structure(),
                                 {zeros(4), zeros(4)}),
                  ConfigError);
  CHECK_THROWS_AS(LieBundleModel(Box{{1.0, -1.0}, {-1.0, 1.0}}, 1, ufield,
                                 {{{"0"}}, {{"0"}}}),
                  ConfigError);

  // a healthy model reports clean axioms everywhere
  const LieBundleModel& m = so3_ad_model();
  CHECK(m.base_dim() == 2);
  CHECK(m.fiber_dim() == 3);
  CHECK(m.antisymmetry_residual({0.3, -0.7}) == 0.0);
  CHECK(m.jacobi_residual({0.3, -0.7}) == 0.0);
  CHECK_THROWS_AS(m.structure_at({0.1}), ConfigError);
  CHECK_THROWS_AS(m.connection_at({0.1, 0.2}, 2), ConfigError);
}

TEST_CASE("zero connection transports trivially") {
  LieBundleModel model(square_chart(1.0), 2,
                       Grid3(2, std::vector<std::vector<std::string>>(
                                    2, std::vector<std::string>(2, "0"))),
                       {zeros(2), zeros(2)});
  Curve c = Curve::polyline({{-0.5, -0.3}, {0.2, 0.4}, {0.6, -0.2}});
  Eigen::MatrixXd f0(2, 2);
  f0 << 1, 2, 0, 1;
  ParallelFrameResult res = parallel_frame(model, c, f0);
  CHECK((res.frame_end - f0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(res.fully_valid);
  CHECK(res.valid_until == 1.0);
  CHECK(std::abs(res.min_abs_det - 1.0) < 1e-12);
  CHECK(lie_connection_residual(model, {0.1, 0.1}, 0) == 0.0);
  CHECK(lie_connection_residual(model, {0.1, 0.1}, 1) == 0.0);
  CHECK(transport_bracket_check(model, c) == 0.0);
  CHECK((ray_frame(model, {-0.5, -0.3}, {0.6, 0.2}, f0) - f0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("scalar fiber with constant coefficient decays exponentially") {
  LieBundleModel model(Box{{-2.0}, {2.0}}, 1, {{{"0"}}}, {{{"0.7"}}});
  Curve c = Curve::segment({0.0}, {1.0});
  Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
  ParallelFrameResult res = parallel_frame(model, c, one);
  CHECK(std::abs(res.frame_end(0, 0) - std::exp(-0.7)) < 1e-10);
  CHECK(std::abs(lambda_at(model, c, 0.5)(0, 0) - std::exp(-0.35)) < 1e-10);
  CHECK(lambda_at(model, c, 0.0)(0, 0) == 1.0);
  CHECK(res.fully_valid);
}

TEST_CASE("rapid decay trips the determinant floor and reports the valid range") {
  LieBundleModel model(Box{{-2.0}, {2.0}}, 1, {{{"0"}}}, {{{"30"}}});
  Curve c = Curve::segment({0.0}, {1.0});
  ParallelFrameResult res = parallel_frame(model, c, Eigen::MatrixXd::Identity(1, 1));
  // |L| = exp(-30 t) crosses 1e-10 near t = ln(1e10)/30 = 0.7675
  CHECK_FALSE(res.fully_valid);
  CHECK(res.valid_until > 0.6);
  CHECK(res.valid_until < 0.768);
  CHECK(res.min_abs_det < 1e-10);
  CHECK(res.frame_end(0, 0) > 0.0);
  CHECK(res.frame_end(0, 0) < 1e-10);
}

TEST_CASE("adjoint-valued connections are bracket derivations everywhere") {
  const LieBundleModel& m = so3_ad_model();
  for (const auto& x : std::vector<Vec<double>>{{0.0, 0.0}, {0.5, -0.6}, {-0.8, 0.3}}) {
    CHECK(lie_connection_residual(m, x, 0) < 1e-12);
    CHECK(lie_connection_residual(m, x, 1) < 1e-12);
  }
}

TEST_CASE("transported frames satisfy the defining derivative equation") {
  const LieBundleModel& m = so3_ad_model();
  // straight legs keep the fifth time-derivative of the frame small, which the
  // fourth-order difference quotient needs to resolve the residual below 1e-9
  Curve c = Curve::polygon({{-0.6, -0.4}, {0.3, 0.5}, {0.7, -0.3}});
  for (double t : {0.3, 0.55, 0.8}) CHECK(frame_derivative_defect(m, c, t) < 1e-9);
}

TEST_CASE("traceless connections keep the frame determinant at one") {
  const LieBundleModel& m = so3_ad_model();
  Curve c = Curve::polyline({{-0.6, -0.4}, {0.3, 0.5}, {0.7, -0.3}});
  ParallelFrameResult res = parallel_frame(m, c, Eigen::MatrixXd::Identity(3, 3));
  CHECK(res.fully_valid);
  for (const auto& L : res.lambda) CHECK(std::abs(L.determinant() - 1.0) < 1e-9);
}

TEST_CASE("constant coefficients along a straight line integrate to a matrix exponential") {
  LieBundleModel model(square_chart(1.0), 3, rotation_structure(),
                       {hat("0.3", "0.5", "0.2"), hat("0.1", "-0.4", "0.7")});
  Vec<double> a{-0.5, -0.25}, b{0.4, 0.35};
  Curve c = Curve::segment(a, b);
  Eigen::MatrixXd ktilde = (b[0] - a[0]) * model.connection_at(a, 0) +
                           (b[1] - a[1]) * model.connection_at(a, 1);
  Eigen::MatrixXd L = lambda_at(model, c, 1.0);
  CHECK((L - expm(-ktilde)).cwiseAbs().maxCoeff() < 1e-10);
  Eigen::MatrixXd Lhalf = lambda_at(model, c, 0.5);
  CHECK((Lhalf - expm(-0.5 * ktilde)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("reverse transport undoes forward transport") {
  const LieBundleModel& m = so3_ad_model();
  Curve c = Curve::polyline({{-0.6, -0.4}, {0.3, 0.5}, {0.7, -0.3}});
  Eigen::MatrixXd fwd = lambda_at(m, c, 1.0);
  Eigen::MatrixXd back = lambda_at(m, c.reversed(), 1.0);
  CHECK((back * fwd - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("bracket transport matches bracketing the transports for a Lie connection") {
  const LieBundleModel& m = so3_ad_model();
  CHECK(transport_bracket_check(m, Curve::polyline({{-0.6, -0.4}, {0.3, 0.5}, {0.7, -0.3}})) <
        1e-8);
  CHECK(transport_bracket_check(m, Curve::segment({0.1, -0.7}, {-0.4, 0.6})) < 1e-8);
  CHECK_THROWS_AS(transport_bracket_check(m, Curve::segment({0.0, 0.0}, {0.5, 0.5}),
                                          {{0, 3}}),
                  ConfigError);
}

TEST_CASE("structure constants stay fixed in a parallel frame of a Lie connection") {
  const LieBundleModel& m = so3_ad_model();
  Curve c = Curve::polyline({{-0.6, -0.4}, {0.3, 0.5}, {0.7, -0.3}});
  ParallelFrameResult res = parallel_frame(m, c, Eigen::MatrixXd::Identity(3, 3));
  auto C0 = m.structure_at(c.point(0.0));
  const int n = 3;
  for (std::size_t k : {res.times.size() / 3, 2 * res.times.size() / 3, res.times.size() - 1}) {
    const Eigen::MatrixXd& L = res.lambda[k];
    Eigen::MatrixXd Linv = L.inverse();
    auto Ct = m.structure_at(c.point(res.times[k]));
    for (int f = 0; f < n; ++f)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          double val = 0;
          for (int e = 0; e < n; ++e)
            for (int cc = 0; cc < n; ++cc)
              for (int d = 0; d < n; ++d)
                val += Linv(f, e) * Ct[static_cast<std::size_t>((e * n + cc) * n + d)] *
                       L(cc, a) * L(d, b);
          CHECK(std::abs(val - C0[static_cast<std::size_t>((f * n + a) * n + b)]) < 1e-8);
        }
  }
}

TEST_CASE("a non-adjoint connection breaks both the derivation rule and transport") {
  LieBundleModel model(square_chart(1.0), 3, rotation_structure(),
                       {{{"1", "0", "0"}, {"0", "0", "0"}, {"0", "0", "0"}}, zeros(3)});
  // the defect lands exactly at one: d/dx C is zero and only the first basis
  // direction feels the connection
  double res = lie_connection_residual(model, {0.2, 0.2}, 0);
  CHECK(res == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lie_connection_residual(model, {0.2, 0.2}, 1) == 0.0);

  // transporting along the first axis scales e1 by exp(-1): the bracket
  // [e2,e3] = e1 comes back off by |exp(-1) - 1|
  Curve c = Curve::segment({-0.5, 0.0}, {0.5, 0.0});
  double defect = transport_bracket_check(model, c);
  CHECK(defect > 1e-3);
  CHECK(defect == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-8));
}

TEST_CASE("invariant sub-bundles keep containment and a constant intersection rank") {
  // five-dimensional fiber: rotation algebra on the first three axes plus two
  // abelian directions, connection block-diagonal so both sub-bundles
  // span{e0..e3} and span{e0,e1,e2,e4} are preserved
  Grid3 C = rotation_structure(5);
  auto K_of = [](const std::vector<std::vector<std::string>>& rot, const std::string& k4,
                 const std::string& k5) {
    std::vector<std::vector<std::string>> K(5, std::vector<std::string>(5, "0"));
    for (int b = 0; b < 3; ++b)
      for (int a = 0; a < 3; ++a) K[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] =
          rot[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)];
    K[3][3] = k4;
    K[4][4] = k5;
    return K;
  };
  LieBundleModel model(square_chart(1.0), 5, C,
                       {K_of(hat("0.3*x2", "0.5", "sin(x1)"), "0.3", "x2"),
                        K_of(hat("x1", "0.2*x1*x2", "0.4"), "0.1*x1", "0.2")});

  Curve c = Curve::polyline({{-0.6, -0.4}, {0.3, 0.5}, {0.7, -0.3}});
  ParallelFrameResult res = parallel_frame(model, c, Eigen::MatrixXd::Identity(5, 5));

  Eigen::MatrixXd F1(5, 4), F2(5, 4);
  F1.setZero();
  F2.setZero();
  for (int k = 0; k < 3; ++k) {
    F1(k, k) = 1;
    F2(k, k) = 1;
  }
  F1(3, 3) = 1;
  F2(4, 3) = 1;

  for (std::size_t k : {std::size_t{0}, res.times.size() / 2, res.times.size() - 1}) {
    Eigen::MatrixXd A = res.lambda[k] * F1;
    Eigen::MatrixXd B = res.lambda[k] * F2;
    // containment in the untouched constant sub-bundles
    CHECK(A.row(4).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(B.row(3).cwiseAbs().maxCoeff() < 1e-9);
    // dim(span A) + dim(span B) - dim(span A + span B) = 4 + 4 - 5 = 3
    Eigen::MatrixXd both(5, 8);
    both << A, B;
    CHECK(svd_rank(A) == 4);
    CHECK(svd_rank(B) == 4);
    CHECK(svd_rank(both) == 5);
  }

  // couple e3 into e4 and the first sub-bundle leaks out
  LieBundleModel broken(square_chart(1.0), 5, C,
                        {[&] {
                           auto K = K_of(hat("0.3*x2", "0.5", "sin(x1)"), "0.3", "x2");
                           K[4][3] = "1";
                           return K;
                         }(),
                         K_of(hat("x1", "0.2*x1*x2", "0.4"), "0.1*x1", "0.2")});
  Eigen::MatrixXd leak = lambda_at(broken, c, 1.0) * F1;
  CHECK(leak.row(4).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("frame transport guards its inputs") {
  const LieBundleModel& m = so3_ad_model();
  Curve c = Curve::segment({-0.5, 0.0}, {0.5, 0.0});
  CHECK_THROWS_AS(parallel_frame(m, c, Eigen::MatrixXd::Identity(4, 4)), ConfigError);
  Eigen::MatrixXd singular = Eigen::MatrixXd::Ones(3, 3);
  CHECK_THROWS_AS(parallel_frame(m, c, singular), ConfigError);
  CHECK_THROWS_AS(parallel_frame(m, c, Eigen::MatrixXd::Identity(3, 3), 1.5), ConfigError);
  CHECK_THROWS_AS(parallel_frame(m, c, Eigen::MatrixXd::Identity(3, 3), 0.0), ConfigError);
  CHECK_THROWS_AS(lambda_at(m, Curve::segment({-0.5, 0.0}, {1.5, 0.0}), 1.0), GeometryError);
  CHECK_THROWS_AS(lambda_at(m, Curve::segment({0.0}, {0.5}), 1.0), ConfigError);
}

TEST_CASE("staircase frames match explicit polygon transport") {
  const LieBundleModel& m = so3_ad_model();
  Vec<double> o{-0.5, -0.4}, tgt{0.6, 0.3};
  Eigen::MatrixXd f0 = Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd via_rays = ray_frame(m, o, tgt, f0);
  Curve staircase = Curve::polygon({o, {tgt[0], o[1]}, tgt});
  Eigen::MatrixXd direct = parallel_frame(m, staircase, f0).frame_end;
  CHECK((via_rays - direct).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(std::abs(via_rays.determinant() - 1.0) < 1e-9);
  CHECK((ray_frame(m, o, o, f0) - f0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("holonomy frames: flat spans give nothing, rank-one spans are abelian") {
  FinslerSpace quartic(catalog_metric("minkowski-quartic", 2));
  HolonomyFrame none = frame_from_holonomy(quartic, {0.1, 0.3}, ck_generators(quartic, 3));
  CHECK(none.basis.empty());
  CHECK(none.structure.empty());
  CHECK(none.residual == 0.0);
  CHECK(none.span.rank == 0);

  FinslerSpace sphere(catalog_metric("sphere2"));
  HolonomyFrame one = frame_from_holonomy(sphere, {1.1, 0.8}, ck_generators(sphere, 3));
  CHECK(one.basis == std::vector<int>{0});
  CHECK(one.structure.size() == 1);
  CHECK(one.structure[0] == 0.0);
  CHECK(one.residual == 0.0);
}

TEST_CASE("holonomy frames recover rotation structure constants") {
  FinslerSpace eu(catalog_metric("euclidean", 3));
  FieldPtr L1 = components_field({"0", "-u3", "u2"}, 3);
  FieldPtr L2 = components_field({"u3", "0", "-u1"}, 3);
  FieldPtr L3 = components_field({"-u2", "u1", "0"}, 3);
  // a dependent fourth field must be skipped by the greedy basis scan
  std::vector<FieldPtr> fields{L1, L2, L3, lin_comb({{1.0, L1}, {2.0, L2}})};
  Vec<double> x{0.1, 0.2, -0.1};

  HolonomyFrame fr = frame_from_holonomy(eu, x, fields);
  REQUIRE(fr.basis == std::vector<int>{0, 1, 2});
  CHECK(fr.residual < 1e-8);
  const int r = 3;
  for (int c = 0; c < r; ++c)
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b) {
        // vector-field brackets close with the flipped sign: [L1, L2] = -L3
        double expected = -eps3(a, b, c);
        CHECK(std::abs(fr.structure[static_cast<std::size_t>((c * r + a) * r + b)] - expected) <
              1e-6);
      }
}

TEST_CASE("near-dependent fields leave the rank ill-determined and are rejected") {
  FinslerSpace randers(catalog_metric("randers", 2, 0.3));
  Vec<double> x{0.15, -0.2};
  FieldPtr R = curvature_field(0, 1, 2);
  FieldPtr d0 = nabla(0, R, 2), d1 = nabla(1, R, 2);
  // the third row sits barely above the rank cut and the fourth barely below,
  // so the singular-value gap (about 1.6e3) cannot certify the rank
  std::vector<FieldPtr> fields{R, d0, lin_comb({{1.0, R}, {3e-6, d1}}),
                               lin_comb({{1.0, d0}, {2e-9, nabla(1, d1, 2)}})};
  CHECK_THROWS_AS(frame_from_holonomy(randers, x, fields), ConfigError);
}
