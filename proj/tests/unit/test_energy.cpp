#include "doctest.h"
#include "helpers.hpp"

#include "bilayer/error.hpp"

#include <random>

using namespace bilayer;
using testing::rel;

namespace {

DeformationField flat(std::shared_ptr<const Mesh> mesh) { return interpolate_I3(identity_map, identity_gradient, mesh); }

Mat2 cylinder_z() { return -Eigen::Vector2d(1.0, 0.5).asDiagonal().toDenseMatrix(); }

// coupling minus load, the part of the energy handled explicitly by the flow
double lower_order(const DeformationField& y, const ProblemData& data, const SparseMatrix& k) {
  const auto e = discrete_energy(y, data, k);
  return e.coupling - e.load;
}

}  // namespace

TEST_CASE("flat state energy is half |Z|^2 |omega|") {
  auto mesh = testing::benchmark_mesh(3);
  const auto data = ProblemData::uniform(*mesh, -Mat2::Identity());
  const auto y = flat(mesh);
  const auto e = discrete_energy(y, data);
  CHECK(std::abs(e.bending) < 1e-12);
  CHECK(std::abs(e.coupling) < 1e-12);
  CHECK(std::abs(e.total - 40.0) < 1e-12);
  // 1/2 y^T K y cancels large terms, so only relative roundoff accuracy
  CHECK(rel(discrete_energy(y, data, assemble_stiffness(*mesh)).total, 40.0) < 1e-12);
  CHECK(std::abs(reporting_energy(y, data) - 40.0) < 1e-12);
  CHECK(isometry_defect(y) < 1e-15);
  CHECK(std::abs(min_metric_excess(y)) < 1e-15);

  Mat2 z;
  z << -3, 2, 2, -3;
  const auto d2 = ProblemData::uniform(*mesh, z);
  CHECK(std::abs(discrete_energy(y, d2).total - 0.5 * 26.0 * 40.0) < 1e-10);
}

TEST_CASE("load term is the vertex quadrature of f . y") {
  auto mesh = testing::benchmark_mesh(2);
  const auto data = ProblemData::uniform(*mesh, Mat2::Zero(), Vec3(0, 0, -2));
  auto y = flat(mesh);
  for (Index v = 0; v < mesh->num_vertices(); ++v) y.set_value(v, y.value(v) + Vec3(0, 0, 0.5));
  CHECK(discrete_energy(y, data).load == doctest::Approx(-2 * 0.5 * 40.0));
  CHECK(discrete_energy(y, data).total == doctest::Approx(40.0));
}

TEST_CASE("cylinder reporting energy converges monotonically") {
  const double target = std::pow(2 * std::numbers::pi, 2) / 8.0;
  std::vector<double> gaps, form_err;
  for (int k = 3; k <= 5; ++k) {
    auto mesh = testing::square_2pi(k);
    const auto y = interpolate_I3(testing::cylinder, testing::cylinder_gradient, mesh);
    const auto data = ProblemData::uniform(*mesh, cylinder_z());
    gaps.push_back(std::abs(reporting_energy(y, data) - target));
    // analytic second fundamental form is diag(1, 0)
    const auto phi = apply_discrete_gradient(y);
    double worst = 0.0;
    for (Index c = 0; c < mesh->num_cells(); ++c)
      worst = std::max(worst, (approximate_second_fundamental_form(phi, c, mesh->cell_midpoint(c)) -
                               Eigen::Vector2d(1, 0).asDiagonal().toDenseMatrix()).norm());
    form_err.push_back(worst);
  }
  CAPTURE(gaps[0]);
  CAPTURE(gaps[2]);
  CHECK(gaps[1] < gaps[0]);
  CHECK(gaps[2] < gaps[1]);
  CHECK(gaps[2] < 0.05 * target);
  CHECK(form_err[1] < form_err[0]);
  CHECK(form_err[2] < form_err[1]);
}

TEST_CASE("exact bending term matches the quadratic form") {
  auto mesh = testing::square_2pi(2);
  const auto y = interpolate_I3(testing::cylinder, testing::cylinder_gradient, mesh);
  const auto data = ProblemData::uniform(*mesh, cylinder_z());
  const auto a = discrete_energy(y, data);
  const auto b = discrete_energy(y, data, assemble_stiffness(*mesh));
  CHECK(rel(a.bending, b.bending) < 1e-12);
  CHECK(rel(a.total, b.total) < 1e-12);
  CHECK(a.bending > 0.0);
}

TEST_CASE("metric below identity is rejected") {
  auto mesh = testing::benchmark_mesh(1);
  const auto data = ProblemData::uniform(*mesh, -Mat2::Identity());
  auto y = flat(mesh);
  y.set_gradient(3, 0.9 * identity_gradient({0, 0}));
  CHECK(min_metric_excess(y) == doctest::Approx(0.81 - 1.0));
  CHECK_THROWS_AS(discrete_energy(y, data), InadmissibleState);
}

TEST_CASE("discrete inner product and norms") {
  auto mesh = std::make_shared<const Mesh>(build_mesh(DomainSpec::rectangle(0, 1, 0, 1, 0)));
  const auto one = sample_corners(*mesh, [](Index, const Vec2&) { return 1.0; });
  const auto x = sample_corners(*mesh, [](Index, const Vec2& p) { return p.x(); });
  CHECK(discrete_inner_product(*mesh, one, one) == doctest::Approx(1.0));
  CHECK(discrete_inner_product(*mesh, x, x) == doctest::Approx(0.5));
  CHECK(discrete_inner_product(*mesh, x, one) == doctest::Approx(0.5));
  CHECK(lp_h_norm(*mesh, x, 2.0) == doctest::Approx(std::sqrt(0.5)));
  CHECK(lp_h_norm(*mesh, x, 1.0) == doctest::Approx(0.5));

  auto big = testing::benchmark_mesh(3);
  const auto c = sample_corners(*big, [](Index, const Vec2&) { return 3.0; });
  CHECK(lp_h_norm(*big, c, 1.0) == doctest::Approx(120.0));
}

TEST_CASE("unit vector jacobian") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 a(u(rng), u(rng), u(rng) + 3.0);
    const Mat3 p = unit_vector_jacobian(a);
    CHECK((p * a).norm() < 1e-13);
    CHECK((p - p.transpose()).norm() < 1e-15);
    const Vec3 b(u(rng), u(rng), u(rng));
    const double eps = 1e-6;
    const Vec3 fd = ((a + eps * b).normalized() - (a - eps * b).normalized()) / (2 * eps);
    CHECK((fd - p * b).norm() < 1e-8);
  }
}

TEST_CASE("stiffness: symmetry, size and affine kernel") {
  auto mesh1 = testing::rectangle(0, 1, 0, 1, 1, false);
  const SparseMatrix k1 = assemble_stiffness(*mesh1);
  CHECK(k1.rows() == 81);
  CHECK(k1.cols() == 81);

  auto mesh = testing::benchmark_mesh(2);
  const SparseMatrix k = assemble_stiffness(*mesh);
  const SparseMatrix kt = k.transpose();
  CHECK((k - kt).norm() < 1e-12 * k.norm());

  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::Matrix<double, 3, 2> a;
  a << u(rng), u(rng), u(rng), u(rng), u(rng), u(rng);
  const Vec3 b(u(rng), u(rng), u(rng));
  const auto aff = interpolate_I3([&](const Vec2& x) { return Vec3(a * x + b); }, [&](const Vec2&) { return Mat32(a); }, mesh);
  CHECK((k * aff.dofs()).norm() < 1e-12 * k.norm() * aff.dofs().norm());

  const auto loc = local_stiffness({0.6, 1.7});
  CHECK((loc - loc.transpose()).norm() < 1e-13);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 12, 12>> eig(loc);
  CHECK(eig.eigenvalues().minCoeff() > -1e-12);
  // scalar affine functions: 1, x, y
  int zero_modes = 0;
  for (int i = 0; i < 12; ++i) zero_modes += eig.eigenvalues()(i) < 1e-10 * eig.eigenvalues().maxCoeff();
  CHECK(zero_modes == 3);

  // y^T K y is the integral of |grad grad_h y|^2 over all components
  const auto cyl = interpolate_I3(testing::cylinder, testing::cylinder_gradient, mesh);
  const auto e = discrete_energy(cyl, ProblemData::uniform(*mesh, Mat2::Zero()));
  CHECK(rel(0.5 * cyl.dofs().dot(k * cyl.dofs()), e.bending) < 1e-12);
}

TEST_CASE("assembly is deterministic") {
  auto mesh = testing::benchmark_mesh(3);
  const SparseMatrix a = assemble_stiffness(*mesh);
  const SparseMatrix b = assemble_stiffness(*mesh);
  CHECK(a.nonZeros() == b.nonZeros());
  CHECK((a - b).norm() == 0.0);
}

TEST_CASE("flow right-hand side is consistent with the energy along admissible directions") {
  auto mesh = testing::square_2pi(3);
  const auto y = interpolate_I3(testing::cylinder, testing::cylinder_gradient, mesh);
  std::vector<Mat2> z;
  std::vector<Vec3> f;
  for (Index c = 0; c < mesh->num_cells(); ++c) {
    const Vec2 x = mesh->cell_midpoint(c);
    Mat2 zc;
    zc << -1 + 0.1 * x.y(), 0.3 * std::sin(x.x()), 0.3 * std::sin(x.x()), -0.5;
    z.push_back(zc);
    f.emplace_back(0.1, -0.2 * std::cos(x.y()), 0.4);
  }
  ProblemData data = ProblemData::uniform(*mesh, Mat2::Zero());
  data.z = z;
  data.f = f;
  const SparseMatrix k = assemble_stiffness(*mesh);
  const double tau = 0.01;
  const Eigen::VectorXd g = assemble_flow_rhs(y, apply_discrete_gradient(y), data, tau, k) - k * y.dofs() / tau;
  CHECK((g - coupling_load_rhs(y, data)).norm() < 1e-12 * g.norm());

  const auto constraints = build_constraints(y);
  std::mt19937 rng(21);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(y.dofs().size());
    for (std::size_t v = 0; v < constraints.blocks.size(); ++v) {
      const auto& blk = constraints.blocks[v];
      if (blk.fixed) continue;
      const Eigen::VectorXd coeff = Eigen::VectorXd::NullaryExpr(blk.basis.cols(), [&]() { return n01(rng); });
      w.segment(kDofsPerVertex * static_cast<Index>(v), kDofsPerVertex) = blk.basis * coeff;
    }
    w /= w.norm();
    CHECK(constraints.residual(w) < 1e-12);
    const double eps = 1e-5;
    DeformationField yp(mesh, y.dofs() + eps * w), ym(mesh, y.dofs() - eps * w);
    const double fd = (lower_order(yp, data, k) - lower_order(ym, data, k)) / (2 * eps);
    const double an = -g.dot(w);
    CAPTURE(fd);
    CAPTURE(an);
    CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
  }
}
