package main

import "fmt"

// Unbuffered channel and a single receive: main returns while the other
// workers stay blocked on their sends.
func worker(a chan int, name string) {
	a <- process(name)
}

func main() {
	files := getFiles()
	a := make(chan int)
	for i := 0; i < len(files); i++ {
		go worker(a, files[i])
	}
	res := <-a
	fmt.Println(res)
}
