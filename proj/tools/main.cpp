#include "cli.hpp"
#include "snnw/runtime.hpp"

int main(int argc, char** argv) {
    snnw::tune_allocator();
    return snnw::cli::run(argc, argv);
}
