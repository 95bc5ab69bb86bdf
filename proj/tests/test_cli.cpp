#include <catch2/catch_amalgamated.hpp>
#include "sagd/sagd.hpp"
