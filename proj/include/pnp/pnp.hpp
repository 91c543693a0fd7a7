#ifndef PNP_PNP_HPP
#define PNP_PNP_HPP

#include "pnp/types.hpp"
#include "pnp/mesh.hpp"
#include "pnp/sparse.hpp"
#include "pnp/solvers.hpp"
#include "pnp/mmatrix.hpp"
#include "pnp/quadrature.hpp"
#include "pnp/assembly.hpp"
#include "pnp/manufactured.hpp"
#include "pnp/gummel.hpp"
#include "pnp/timestepper.hpp"
#include "pnp/io.hpp"
#include "pnp/studies.hpp"

#endif  // PNP_PNP_HPP
