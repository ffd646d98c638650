package main

import "fmt"

func worker(a chan int, name string) {
	a <- process(name)
}

func main() {
	files := getFiles()
	a := make(chan int, len(files))
	for i := 0; i < len(files); i++ {
		go worker(a, files[i])
	}
	for j := 0; j < len(files); j++ {
		res := <-a
		fmt.Println(res)
	}
	close(a)
}
